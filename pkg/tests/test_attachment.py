import math
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netarch import AttachmentFunction as A
from netarch import DomainError, RangeError, Regime, classify_regime, kappa, phi, phi_inverse


# -- evaluation ---------------------------------------------------------------

@pytest.mark.parametrize("f,k,expected", [
    (A.linear(0.0), 5, 5.0),
    (A.power(0.5), 4, 2.0),
    (A.constant(1.0), 100, 1.0),
    (A.linear(1.5), 3, 4.5),
    (A.power(0.3, c0=2.0), 8, 2.0 * 8 ** 0.3),
])
def test_eval_f(f, k, expected):
    assert f(k) == pytest.approx(expected, rel=1e-15)


def test_eval_f_rejects_zero():
    with pytest.raises(DomainError):
        A.linear(0.0)(0)


def test_eval_f_floors_real_arguments():
    assert A.linear(0.0)(3.7) == 3.0


def test_table_applies_tail_beyond_values():
    f = A.table([2.0, 1.0, 7.0], A.linear(0.0))
    assert [f(k) for k in range(1, 7)] == [2.0, 1.0, 7.0, 4.0, 5.0, 6.0]


def test_table_requires_tail():
    with pytest.raises(DomainError):
        A("table", values=(1.0, 2.0))


@pytest.mark.parametrize("kwargs", [dict(kind="constant", c=0.0), dict(kind="power", alpha=1.5),
                                    dict(kind="power", alpha=0.0), dict(kind="linear", beta=-1.0),
                                    dict(kind="quadratic")])
def test_invalid_parameters(kwargs):
    with pytest.raises(DomainError):
        A(**kwargs)


def test_declared_slope_bound_is_checked():
    f = A.power(0.5, c0=3.0, c_f=1.0)
    with pytest.raises(DomainError):
        phi(f, 1, 10)


@pytest.mark.parametrize("f", [A.linear(0.0), A.constant(2.5), A.power(0.4, c0=1.5, f_star=1.5, c_f=1.5),
                               A.table([1.0, 3.0], A.power(0.7))])
def test_json_round_trip(f):
    g = A.from_json(f.to_json())
    assert g == f
    assert g.to_json() == f.to_json()


def test_json_field_names():
    assert A.linear(0.0).to_dict() == {"kind": "linear", "beta": 0.0}
    assert A.from_dict({"kind": "constant", "c": 2}).c == 2.0


def test_preset_bounds():
    assert (A.linear(1.0).f_star, A.linear(1.0).c_f) == (2.0, 2.0)
    assert A.power(0.4).alpha_bound == 0.4
    assert A.constant(3.0).f_star == 3.0


# -- Phi transforms -----------------------------------------------------------

def test_phi_examples():
    f = A.linear(0.0)
    assert phi(f, 1, 3) == pytest.approx(1.5)
    assert phi(f, 2, 3) == pytest.approx(1.25)
    assert phi(f, 1, 2.5) == pytest.approx(1.25)
    assert phi(f, 1, 0.5) == 0.0
    assert phi(f, 2, 1) == 0.0


def test_phi_rejects_negative():
    with pytest.raises(DomainError):
        phi(A.linear(0.0), 1, -0.1)


def test_phi_inverse_examples():
    assert phi_inverse(A.linear(0.0), 1, 1.5) == 3.0
    assert phi_inverse(A.power(0.7), 1, 0.0) == 1.0
    assert phi_inverse(A.constant(1.0), 1, 7.25) == pytest.approx(8.25)


def test_phi_inverse_range_error_beyond_cache():
    with pytest.raises(RangeError):
        phi_inverse(A.linear(0.0), 1, 40.0)


def test_phi_inverse_range_error_for_convergent_series():
    f = A.linear(0.0)
    assert phi_inverse(f, 2, 1.6) > 1
    with pytest.raises(RangeError):
        phi_inverse(f, 2, math.pi ** 2 / 6)


def test_kappa_examples():
    assert kappa(A.constant(1.0), 5.0) == pytest.approx(5.0)
    assert kappa(A.linear(0.0), 1.5) == pytest.approx(1.25)
    assert kappa(A.power(0.4), 0.0) == 0.0


def test_sup_bracket_contains_zeta():
    lo, hi = A.linear(0.0).phi_table.sup(2)
    assert lo <= math.pi ** 2 / 6 <= hi
    from scipy.special import zeta
    lo, hi = A.power(0.6).phi_table.sup(2)
    assert lo <= zeta(1.2) <= hi
    assert A.power(0.4).phi_table.sup(2) == (math.inf, math.inf)


def test_classify_regime():
    assert classify_regime(A.linear(1.0)) is Regime.PERSISTENT
    assert classify_regime(A.power(0.4)) is Regime.NON_PERSISTENT
    assert classify_regime(A.power(0.6)) is Regime.PERSISTENT
    assert classify_regime(A.constant(1.0)) is Regime.NON_PERSISTENT
    assert classify_regime(A.table([1.0], A.power(0.5))) is Regime.NON_PERSISTENT


def test_phi_matches_direct_sum():
    f = A.power(0.45, c0=1.3)
    i = np.arange(1, 5000)
    direct = np.cumsum(1.0 / f.values_at(i) ** 2)
    got = phi(f, 2, np.arange(2, 5001))
    np.testing.assert_allclose(got, direct, rtol=1e-13)


def test_concurrent_readers_see_consistent_tables():
    f = A.power(0.3)
    out = []

    def work(y):
        out.append((y, phi(f, 1, phi_inverse(f, 1, y))))

    threads = [threading.Thread(target=work, args=(float(y),)) for y in range(5, 400, 20)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(abs(a - b) <= 1e-9 * max(1.0, a) for a, b in out)


# -- properties ---------------------------------------------------------------

presets = st.one_of(
    st.builds(A.linear, st.floats(0.0, 5.0)),
    st.builds(A.constant, st.floats(0.2, 5.0)),
    st.builds(A.power, st.floats(0.05, 1.0), st.floats(0.2, 3.0)),
)


@given(presets, st.sampled_from([1, 2]), st.floats(0, 500), st.floats(0, 500))
def test_phi_monotone(f, order, x1, x2):
    a, b = sorted((x1, x2))
    pa, pb = phi(f, order, a), phi(f, order, b)
    assert pa <= pb
    if 1 <= a < b:
        assert pa < pb


def test_round_trip_thousand_values():
    rng = np.random.default_rng(5)
    # upper ends keep Phi_1^-1 inside the 2^24-entry cache (Phi_1 ~ log x for linear f)
    for f, top in ((A.linear(0.0), 15.0), (A.power(0.4), 40.0), (A.constant(2.0), 40.0),
                   (A.power(0.9, c0=0.5), 40.0)):
        ys = rng.uniform(0, top, size=1000)
        for y in ys:
            assert abs(phi(f, 1, phi_inverse(f, 1, y)) - y) <= 1e-9 * max(1.0, y)
    f = A.linear(0.0)
    for y in rng.uniform(0, 1.6, size=1000):
        assert abs(phi(f, 2, phi_inverse(f, 2, y)) - y) <= 1e-9 * max(1.0, y)


@given(presets, st.integers(1, 3000))
def test_kappa_at_integer_points(f, l):
    assert kappa(f, phi(f, 1, l)) == phi(f, 2, l)


def test_kappa_sublinear_for_power():
    f = A.power(0.4)
    assert kappa(f, 1e4) / 1e4 < kappa(f, 1e2) / 1e2
