import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from netarch import AttachmentFunction as A
from netarch import (BracketFailure, DivergenceDetected, DomainError, GeneralM, GeneralTree,
                     LinearTheorem, budget_bn, budget_bounds, malthusian_rate, muhat, radius_rn,
                     tilde_alpha_star, yule_mgf)


def direct_muhat(f, theta, terms):
    """Oracle: plain running product, no tail correction."""
    k = np.arange(1, terms + 1)
    fk = f.values_at(k)
    return float(np.exp(np.cumsum(np.log(fk / (theta + fk)))).sum())


# -- mu_hat ---------------------------------------------------------------------

def test_muhat_constant_geometric():
    assert muhat(A.constant(1.0), 2.0) == pytest.approx(0.5, rel=1e-14)


def test_muhat_linear_closed_form_and_partial_sum():
    assert muhat(A.linear(0.0), 2.0) == pytest.approx(1.0, rel=1e-14)
    # p_k = 2/((k+1)(k+2)), so 10^4 terms leave a remainder of 2/10002
    assert direct_muhat(A.linear(0.0), 2.0, 10_000) == pytest.approx(1.0 - 2 / 10_002, rel=1e-10)


def test_muhat_linear_diverges_below_one():
    with pytest.raises(DivergenceDetected):
        muhat(A.linear(0.0), 0.5)


@pytest.mark.parametrize("f,theta", [(A.power(0.4), 1.5), (A.power(0.5), 0.7), (A.power(0.3, c0=2.0), 1.1)])
def test_muhat_numeric_matches_direct_sum(f, theta):
    assert muhat(f, theta) == pytest.approx(direct_muhat(f, theta, 400_000), rel=1e-10)


def test_muhat_table_linear_tail_matches_numeric_route():
    closed = muhat(A.table([1.0, 2.0, 3.0], A.linear(0.0)), 3.0)
    numeric = muhat(A.table([1.0, 2.0, 3.0], A.power(1.0)), 3.0)
    assert closed == pytest.approx(0.5, rel=1e-14)
    assert numeric == pytest.approx(closed, rel=1e-6)


def test_muhat_table_constant_tail():
    f = A.table([2.0, 0.5], A.constant(1.0))
    assert muhat(f, 1.3) == pytest.approx(direct_muhat(f, 1.3, 2000), rel=1e-12)


def test_muhat_numeric_divergence_detected():
    with pytest.raises(DivergenceDetected):
        muhat(A.table([1.0], A.power(1.0)), 0.5)


def test_muhat_domain():
    with pytest.raises(DomainError):
        muhat(A.constant(1.0), 0.0)
    with pytest.raises(DomainError):
        muhat(A.constant(1.0), 1.0, tol=0.0)


@given(st.sampled_from([A.constant(1.5), A.linear(0.5), A.power(0.4), A.power(0.8, c0=0.7)]),
       st.floats(1.6, 6.0), st.floats(0.01, 2.0))
def test_muhat_strictly_decreasing(f, theta, gap):
    assert muhat(f, theta) > muhat(f, theta + gap)


# -- Malthusian rate ---------------------------------------------------------------

@pytest.mark.parametrize("f,lam", [(A.constant(1.0), 1.0), (A.linear(0.0), 2.0), (A.linear(1.0), 3.0),
                                   (A.constant(2.5), 2.5), (A.power(1.0, c0=2.0), 4.0)])
def test_malthusian_closed_forms(f, lam):
    sol = malthusian_rate(f)
    assert abs(sol.lambda_star - lam) <= 1e-6
    assert f.f_star <= sol.bracket[0] <= sol.bracket[1] <= 2 * f.c_f


@pytest.mark.parametrize("f", [A.power(0.4), A.power(0.5), A.power(0.75, c0=1.7),
                               A.table([3.0, 1.0], A.power(0.5), f_star=1.0, c_f=3.0)])
def test_malthusian_against_brentq_oracle(f):
    sol = malthusian_rate(f, tol=1e-10)
    oracle = brentq(lambda th: direct_muhat(f, th, 400_000) - 1.0, f.f_star, 2 * f.c_f, xtol=1e-13)
    assert sol.lambda_star == pytest.approx(oracle, abs=1e-8)


@pytest.mark.parametrize("f", [A.constant(1.0), A.linear(0.0), A.linear(2.0), A.power(0.4), A.power(0.6),
                               A.power(0.9)])
def test_malthusian_residual_within_reported_tolerance(f):
    tol = 1e-9
    sol = malthusian_rate(f, tol=tol)
    resid = abs(muhat(f, sol.lambda_star) - 1.0)
    assert resid <= sol.tolerance + 1e-15
    assert resid <= 10 * tol


def test_malthusian_bracket_failure():
    with pytest.raises(BracketFailure):
        malthusian_rate(A.power(0.5, c_f=0.5))


def test_malthusian_record_fields():
    d = malthusian_rate(A.power(0.5)).to_dict()
    assert set(d) == {"lambda_star", "bracket", "tolerance", "muhat_at_solution", "term_count_used"}
    assert d["term_count_used"] > 0


# -- alpha-tilde -------------------------------------------------------------------

@pytest.mark.parametrize("x,expected", [(0.5, 0.5 * (1 - math.log(0.5))), (1.0, 1.0), (2.0, 1.0)])
def test_alpha_star_constant_examples(x, expected):
    assert tilde_alpha_star(A.constant(1.0), 1.0, x) == pytest.approx(expected, abs=1e-8)


@given(st.floats(0.01, 1.0))
def test_alpha_star_constant_closed_form(x):
    assert tilde_alpha_star(A.constant(1.0), 1.0, x) == pytest.approx(x - x * math.log(x), abs=1e-7)


def test_alpha_star_lemma_shape_for_power():
    alpha = 0.5
    f = A.power(alpha)
    lam = malthusian_rate(f).lambda_star
    xs = [0.01, 0.05, 0.1]
    vals = [tilde_alpha_star(f, lam, x) for x in xs]
    k = 2 / (1 - alpha)
    C = (vals[-1] + k * xs[-1] * math.log(xs[-1])) / xs[-1]  # fitted at the largest x
    for x, v in zip(xs, vals):
        assert v <= C * x - k * x * math.log(x) + 1e-12


def test_alpha_star_domain():
    with pytest.raises(DomainError):
        tilde_alpha_star(A.constant(1.0), 1.0, 0.0)


# -- r_n and b_n ----------------------------------------------------------------------

def test_radius_examples():
    f = A.constant(1.0)
    assert radius_rn(math.exp(7.5), 1.5, 2.0, f) == pytest.approx(15.0)
    assert radius_rn(math.exp(10), 1.0, 1.0, f) == pytest.approx(10.0)
    assert radius_rn(10**6, 1.3, 0.0, A.power(0.4)) == 0.0
    with pytest.raises(DomainError):
        radius_rn(2, 1.0, 1.0, f)


def test_budget_bn_examples():
    assert budget_bn(math.exp(4), 1.0, 0.5, 1.0) == pytest.approx(65536.0, rel=1e-12)
    r = 0.7
    assert budget_bn(math.exp(2 * r * math.e), r, 0.5, 1.0) == pytest.approx(math.exp(16 * r), rel=1e-12)
    with pytest.raises(DomainError):
        budget_bn(math.exp(2.0), 1.0, 0.5, 1.0)
    assert budget_bn(1e300, 50.0, 0.5, 1.0) == math.inf


# -- budget exponents -----------------------------------------------------------------

def test_budget_linear_examples():
    assert budget_bounds(0.1, LinearTheorem(1, 0.0)).lower_exponent == 2.0
    assert budget_bounds(0.1, LinearTheorem(2, 0.0)).lower_exponent == 1.0
    b = budget_bounds(0.1, LinearTheorem(1, 1.0))
    assert b.lower_exponent == b.upper_exponent == 1.5
    assert b.upper_shape() == pytest.approx(0.1 ** -1.5 * math.exp(math.sqrt(math.log(10))))


def test_budget_general_tree_matches_linear():
    b = budget_bounds(0.2, GeneralTree(3.0, 2.0, 1e-12))
    assert b.lower_exponent == pytest.approx(1.5)
    assert b.upper_exponent == pytest.approx(1.5)


def test_budget_domain():
    for eps in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            budget_bounds(eps, LinearTheorem(1, 0.0))
    with pytest.raises(DomainError):
        budget_bounds(0.5, GeneralTree(2.0, 1.0, 1.0))


@given(st.floats(0.01, 0.99), st.floats(0.1, 5), st.floats(1, 10), st.floats(0.01, 0.99),
       st.integers(1, 6), st.floats(1, 3))
def test_budget_exponents_ordered(eps, f_star, slope_ratio, delta, m, fm_ratio):
    c_f = f_star * slope_ratio
    lam = f_star * (1 + slope_ratio)
    for reg in (GeneralTree(lam, f_star, delta), GeneralM(c_f, f_star, f_star * fm_ratio, m, delta),
                LinearTheorem(m, slope_ratio)):
        b = budget_bounds(eps, reg)
        assert 0 < b.lower_exponent <= b.upper_exponent
        assert b.lower_shape() <= b.upper_shape()


# -- Yule MGF ---------------------------------------------------------------------

def test_yule_mgf_examples():
    assert yule_mgf(0.3, 0.0, 1.7, 0.4) == pytest.approx(math.exp(0.3))
    assert yule_mgf(0.0, 2.0, 1.0, 0.5) == pytest.approx(1.0)
    h = 1e-6
    deriv = (yule_mgf(h, 2.0, 1.0, 0.0) - yule_mgf(-h, 2.0, 1.0, 0.0)) / (2 * h)
    assert abs(deriv - math.exp(2.0)) < 1e-4


def test_yule_mgf_immigration_mean():
    # mean of a Yule(nu) process with immigration beta from one individual: (1 + beta/nu) e^{nu t} - beta/nu
    nu, beta, t, h = 1.3, 0.6, 0.8, 1e-6
    deriv = (yule_mgf(h, t, nu, beta) - yule_mgf(-h, t, nu, beta)) / (2 * h)
    assert deriv == pytest.approx((1 + beta / nu) * math.exp(nu * t) - beta / nu, rel=1e-6)


def test_yule_mgf_domain():
    with pytest.raises(DomainError):
        yule_mgf(0.5, 2.0, 1.0, 0.0)
