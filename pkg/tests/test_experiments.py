import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import digamma

from netarch import AttachmentFunction as A
from netarch import DomainError, ExperimentConfig, derive_seed, run_experiment
from netarch.experiments import (NOT_ACHIEVED, budget_estimate, embedding_equivalence, event_probability_AK,
                                 maxdeg_age_stat, maxdeg_index, neighborhood_hit, ols_slope, persistence_probe,
                                 root_hit_curve, tn_drift_experiment, two_sample_chisquare, wilson_interval)

CONST = A.constant(1.0)


def cfg(**kw):
    kw.setdefault("f", CONST)
    return ExperimentConfig(**kw)


# -- configuration ----------------------------------------------------------------

def test_config_round_trip_and_schema():
    c = cfg(experiment="root_hit_curve", n=50, k_grid=(1, 2, 5), replications=10, master_seed=3)
    d = c.to_dict()
    assert d["schema"] == "netarch-config v1"
    assert ExperimentConfig.from_json(json.dumps(d)) == c
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({**d, "bogus": 1})
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({**d, "schema": "netarch-config v0"})


@pytest.mark.parametrize("kw", [dict(replications=0), dict(checkpoints=(10, 5)), dict(epsilon=1.0),
                                dict(epsilon=0.0), dict(m=0)])
def test_config_invariants(kw):
    with pytest.raises(DomainError):
        cfg(experiment="root_hit_curve", n=5, **kw)


def test_derive_seed_is_fixed_splitmix():
    # reference values of the SplitMix64 finaliser, computed by hand-rolled big-int arithmetic
    def mix(z):
        M = (1 << 64) - 1
        z = (z + 0x9E3779B97F4A7C15) & M
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        return z ^ (z >> 31)
    for master in (0, 1, 2**63 + 5):
        for i in (0, 1, 999):
            assert derive_seed(master, i) == mix(mix(master) ^ i)
    assert len({derive_seed(7, i) for i in range(10_000)}) == 10_000


# -- statistics helpers ----------------------------------------------------------

def test_wilson_interval_known_value():
    lo, hi = wilson_interval(50, 100)
    # closed form for p_hat = 1/2
    z = 1.959963984540054
    half = z * math.sqrt(0.25 / 100 + z * z / (4 * 100 ** 2)) / (1 + z * z / 100)
    assert lo == pytest.approx(0.5 - half, abs=1e-12)
    assert hi == pytest.approx(0.5 + half, abs=1e-12)


def test_wilson_coverage():
    covered = 0
    for rep in range(100):
        res = root_hit_curve(cfg(experiment="root_hit_curve", n=2, k_grid=(1,), replications=400,
                                 master_seed=1000 + rep))
        row = res.table[0]
        covered += row["wilson_lo"] <= 0.5 <= row["wilson_hi"]
    assert covered >= 93


def test_chisquare_pools_sparse_bins():
    rng = np.random.default_rng(0)
    a = rng.poisson(3, 5000)
    b = rng.poisson(3, 5000)
    res = two_sample_chisquare(a, b)
    assert res["p_value"] > 0.01
    assert res["dof"] == res["bins"] - 1
    assert res["bins"] <= 12
    assert two_sample_chisquare(rng.poisson(3, 5000), rng.poisson(3.5, 5000))["p_value"] < 1e-6


def test_ols_slope_exact_line():
    slope, se = ols_slope([0, 1, 2, 3], [1, 3, 5, 7])
    assert slope == pytest.approx(2.0)
    assert se == pytest.approx(0.0, abs=1e-12)


# -- root-hit curve and budget -------------------------------------------------------

def test_root_hit_k1_n2_is_half():
    R = 100_000
    res = root_hit_curve(cfg(experiment="root_hit_curve", n=2, k_grid=(1, 2, 3), replications=R))
    p = [row["p_hat"] for row in res.table]
    assert abs(p[0] - 0.5) <= 3 * math.sqrt(0.25 / R)
    assert p[1] == 1.0 and p[2] == 1.0
    assert all(row["R"] == R for row in res.table)


@given(st.integers(0, 2**32), st.sampled_from([CONST, A.linear(0.0), A.power(0.4)]))
def test_hit_probability_nondecreasing_in_k(seed, f):
    res = root_hit_curve(cfg(experiment="root_hit_curve", f=f, n=60, k_grid=(1, 2, 4, 8, 16, 61),
                             replications=30, master_seed=seed))
    counts = [row["hit_count"] for row in res.table]
    assert counts == sorted(counts)
    assert counts[-1] == 30


def test_budget_estimate_examples():
    c = cfg(experiment="budget_estimate", n=2, k_grid=(1, 2, 3), replications=100_000)
    curve = root_hit_curve(c)
    # Wilson lower bound at exact p=1/2 sits below 1/2, so eps=0.5 needs K=2
    assert budget_estimate(c, 0.5, curve) == 2
    assert budget_estimate(c, 0.52, curve) == 1
    assert budget_estimate(c, 0.999, curve) == 1
    ks = [budget_estimate(c, e, curve) for e in np.linspace(0.01, 0.99, 40)]
    assert ks == sorted(ks, reverse=True)


def test_budget_not_achieved():
    c = cfg(experiment="budget_estimate", f=A.power(0.3), n=200, k_grid=(1,), replications=50)
    assert budget_estimate(c, 0.01) is NOT_ACHIEVED


def test_run_experiment_budget_sets_k_hat():
    c = cfg(experiment="budget_estimate", n=2, k_grid=(1, 2), replications=2000, epsilon=0.3)
    res = run_experiment(c)
    assert res.summary["k_hat"] == 2


# -- persistence ------------------------------------------------------------------

def test_persistence_deterministic():
    c = cfg(experiment="persistence_probe", f=A.power(0.4), checkpoints=(10, 100, 1000), replications=1,
            master_seed=42)
    a, b = persistence_probe(c), persistence_probe(c)
    assert a.records[0].stats == b.records[0].stats
    st_ = a.records[0].stats
    assert 0 <= st_["changes"] <= 2
    assert len(st_["top"]) == 3


def test_persistence_needs_two_checkpoints():
    with pytest.raises(DomainError):
        persistence_probe(cfg(experiment="persistence_probe", checkpoints=(10,), replications=1))


def test_persistence_linear_fewer_changes_than_power():
    cps = tuple(int(x) for x in np.geomspace(100, 20_000, 12))
    lin = persistence_probe(cfg(experiment="persistence_probe", f=A.linear(0.0), checkpoints=cps,
                                replications=60))
    pw = persistence_probe(cfg(experiment="persistence_probe", f=A.power(0.4), checkpoints=cps,
                               replications=60))
    assert lin.summary["median_changes"] < pw.summary["median_changes"]


# -- the event A_K ---------------------------------------------------------------

def exact_ak(K):
    # m=1, f(i)=i, d*=1, beta_frac=1: v_{i+1} must avoid v0, which holds weight 1 of 2i
    p = 1.0
    for i in range(1, K):
        p *= 1 - 1 / (2 * i)
    return p


def test_exact_ak_oracle_values():
    assert exact_ak(2) == 0.5
    assert exact_ak(3) == 0.375


def test_event_probability_small_k():
    R = 100_000
    res = event_probability_AK(cfg(experiment="event_probability_AK", f=A.linear(0.0), k_grid=(2, 3, 6),
                                   d_star=1, beta_frac=1.0, replications=R))
    for row in res.table:
        p = exact_ak(row["K"])
        assert abs(row["p_hat"] - p) <= 3 * math.sqrt(p * (1 - p) / R)


def test_event_probability_validation():
    with pytest.raises(DomainError):
        event_probability_AK(cfg(experiment="event_probability_AK", m=2, d_star=1, k_grid=(2,)))
    with pytest.raises(DomainError):
        event_probability_AK(cfg(experiment="event_probability_AK", beta_frac=0.0, k_grid=(2,)))


# -- max-degree age ----------------------------------------------------------------

def test_maxdeg_index_is_oldest_among_v1_to_vn():
    assert maxdeg_index([9, 1, 3, 3, 2]) == 2
    assert maxdeg_index([1, 1]) == 1


def test_maxdeg_ratio_positive():
    res = maxdeg_age_stat(cfg(experiment="maxdeg_age_stat", f=A.power(0.5), n=2000, replications=40))
    for r in res.records:
        if r.stats["index"][0] >= 2:
            assert r.stats["ratio"][0] > 0
        assert r.stats["youngest_index"][0] >= r.stats["index"][0] or r.stats["youngest_index"][0] == 0
    assert res.summary["target"] == pytest.approx(res.summary["lambda_star"] ** 2 / 2)


# -- neighbourhood hits -------------------------------------------------------------

def test_neighborhood_monotone_in_c1_and_full_at_diameter():
    res = neighborhood_hit(cfg(experiment="neighborhood_hit", f=A.power(0.4), n=2000,
                               c1=(0.0, 0.2, 0.5, 1.0, 2.0, 60.0), replications=50))
    freq = [row["p_hat"] for row in res.table]
    assert freq == sorted(freq)
    assert freq[-1] == 1.0
    for r in res.records:
        c = r.stats["contains"]
        assert c == sorted(c)
    assert res.table[0]["size_median"] == 1.0


# -- embedding ----------------------------------------------------------------------

def test_generator_vs_generator_null():
    res = embedding_equivalence(cfg(experiment="embedding_equivalence", f=A.linear(0.0), l=15, arm="generator",
                                    replications=20_000))
    assert res.summary["min_p_value"] > 0.01


def test_embedding_arm_validation():
    with pytest.raises(DomainError):
        embedding_equivalence(cfg(experiment="embedding_equivalence", l=40))
    with pytest.raises(DomainError):
        embedding_equivalence(cfg(experiment="embedding_equivalence", l=10, m=2, arm="ctbp"))


# -- drift -------------------------------------------------------------------------

def test_tn_drift_summary_and_determinism():
    c = cfg(experiment="tn_drift_experiment", n=1000, replications=2000, lambda_star=1.0)
    a = tn_drift_experiment(c)
    assert a.jsonl() == tn_drift_experiment(c).jsonl()
    s = a.summary
    assert abs(s["mean"] + digamma(2.0)) <= 4 * s["se"] + 0.01
    assert s["q05"] <= s["median"] <= s["q95"]


# -- reproducibility ----------------------------------------------------------------

def test_jsonl_byte_identical_and_written(tmp_path):
    c = cfg(experiment="root_hit_curve", f=A.power(0.5), n=300, k_grid=(1, 3, 10), replications=200,
            master_seed=77)
    a = root_hit_curve(c)
    jp, cp = a.write(tmp_path)
    assert jp.read_bytes() == root_hit_curve(c).jsonl().encode()
    assert cp.read_text().splitlines()[0].startswith("K,hit_count,R")
    first = json.loads(jp.read_text().splitlines()[0])
    assert first["seed"] == derive_seed(77, 0)
    assert "wall_time" not in first


def test_worker_count_does_not_change_results():
    c = cfg(experiment="neighborhood_hit", f=A.power(0.4), n=500, c1=(0.5, 2.0), replications=40,
            master_seed=5)
    one = neighborhood_hit(c)
    two = neighborhood_hit(c.with_overrides(workers=2))
    assert one.jsonl() == two.jsonl()
    assert one.table == two.table


def test_unknown_experiment():
    with pytest.raises(DomainError):
        run_experiment(cfg(experiment="nope", n=3))
