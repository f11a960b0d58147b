"""Reproducible Monte Carlo harness.

A run is described by an :class:`ExperimentConfig` (JSON schema
``netarch-config v1``).  Replication ``i`` uses the seed
``derive_seed(master_seed, i)``, so results do not depend on how
replications are spread over worker processes: records are always
collected and written in replication order.

Seed derivation uses the SplitMix64 finaliser::

    seed_i = mix(mix(master_seed) XOR i)
    mix(z): z += 0x9E3779B97F4A7C15
            z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
            z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
            return z ^ (z >> 31)          (all arithmetic mod 2**64)
"""
from __future__ import annotations

import csv
import io
import json
import math
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import stats as sstats
from statsmodels.stats.proportion import proportion_confint

from . import ctbp
from .analytics import budget_bn, malthusian_rate, radius_rn
from .attachment import AttachmentFunction
from .errors import DomainError, RangeError
from .generator import EvolvingGraph, grow_arrays, make_rng, rekey
from .rootfind import bfs_distances, degree_topk, root_rank, vmax

__all__ = [
    "CONFIG_SCHEMA",
    "ExperimentConfig",
    "ExperimentRecord",
    "ExperimentResult",
    "NotAchieved",
    "NOT_ACHIEVED",
    "derive_seed",
    "wilson_interval",
    "two_sample_chisquare",
    "ols_slope",
    "root_hit_curve",
    "budget_estimate",
    "persistence_probe",
    "event_probability_AK",
    "maxdeg_age_stat",
    "neighborhood_hit",
    "embedding_equivalence",
    "tn_drift_experiment",
    "run_experiment",
    "EXPERIMENTS",
]

CONFIG_SCHEMA = "netarch-config v1"
_MASK = (1 << 64) - 1


# -- seeds and statistics ---------------------------------------------------

def _mix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, i: int) -> int:
    return _mix(_mix(int(master_seed) & _MASK) ^ (int(i) & _MASK))


def _stream_seed(master_seed: int, stream: int) -> int:
    # independent sub-streams (e.g. the two arms of a comparison)
    return derive_seed(master_seed, (1 << 63) | stream)


def wilson_interval(count: int, nobs: int, alpha: float = 0.05) -> tuple[float, float]:
    lo, hi = proportion_confint(count, nobs, alpha=alpha, method="wilson")
    return float(lo), float(hi)


def two_sample_chisquare(a, b, min_expected: float = 5.0) -> dict:
    """Chi-square homogeneity test for two integer samples.

    Categories are sorted by value and adjacent ones are pooled until every
    expected cell count reaches ``min_expected``.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    values = np.union1d(a, b)
    ca = np.searchsorted(values, a)
    cb = np.searchsorted(values, b)
    table = np.vstack([np.bincount(ca, minlength=values.size),
                       np.bincount(cb, minlength=values.size)]).astype(float)
    frac = table.sum(axis=1) / table.sum()
    need = min_expected / frac.min()
    bins, acc = [], np.zeros(2)
    for j in range(values.size):
        acc = acc + table[:, j]
        if acc.sum() >= need:
            bins.append(acc)
            acc = np.zeros(2)
    if acc.sum() > 0:
        if bins:
            bins[-1] = bins[-1] + acc
        else:
            bins.append(acc)
    pooled = np.array(bins).T
    if pooled.shape[1] < 2:
        return {"statistic": 0.0, "p_value": 1.0, "dof": 0, "bins": int(pooled.shape[1])}
    stat, p, dof, _ = sstats.chi2_contingency(pooled, correction=False)
    return {"statistic": float(stat), "p_value": float(p), "dof": int(dof), "bins": int(pooled.shape[1])}


def ols_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of ``y`` on ``x`` and its standard error."""
    res = sstats.linregress(np.asarray(x, float), np.asarray(y, float))
    return float(res.slope), float(res.stderr)


# -- configuration ------------------------------------------------------------

def _tuple(v, conv=int):
    if v is None:
        return ()
    if isinstance(v, (list, tuple)):
        return tuple(conv(x) for x in v)
    return (conv(v),)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment run.

    ``k_grid`` is the budget grid for :func:`root_hit_curve` and the list of
    graph sizes ``K`` for :func:`event_probability_AK`.  ``top_k`` is the
    tracked top-K size in :func:`persistence_probe`.  ``c1`` may hold
    several values; :func:`neighborhood_hit` evaluates all of them on the
    same graphs.  ``arm`` selects the comparison arm of
    :func:`embedding_equivalence` (``auto`` picks the branching-process
    view for ``m = 1`` and the collapsed process otherwise).
    """

    experiment: str
    f: AttachmentFunction
    m: int = 1
    n: int | None = None
    checkpoints: tuple[int, ...] = ()
    replications: int = 1000
    master_seed: int = 0
    k_grid: tuple[int, ...] = ()
    top_k: int = 1
    epsilon: float | None = None
    c1: tuple[float, ...] = (2.0,)
    beta_frac: float = 1.0
    d_star: int | None = None
    t_max: float | None = None
    l: int | None = None
    arm: str = "auto"
    lambda_star: float | None = None
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if int(self.m) != self.m or self.m < 1:
            raise DomainError("m must be a positive integer")
        if list(self.checkpoints) != sorted(self.checkpoints):
            raise DomainError("checkpoints must be sorted ascending")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise DomainError("epsilon must lie in (0,1)")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ExperimentConfig:
        d = dict(d)
        schema = d.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise DomainError(f"unsupported config schema {schema!r}")
        known = {fl.name for fl in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        if "f" not in d or "experiment" not in d:
            raise DomainError("config needs 'experiment' and 'f'")
        f = d["f"]
        d["f"] = f if isinstance(f, AttachmentFunction) else AttachmentFunction.from_dict(f)
        for key, conv in (("checkpoints", int), ("k_grid", int), ("c1", float)):
            if key in d:
                d[key] = _tuple(d[key], conv)
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_json(Path(path).read_text())

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"schema": CONFIG_SCHEMA}
        for fl in fields(self):
            v = getattr(self, fl.name)
            if isinstance(v, AttachmentFunction):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = list(v)
            out[fl.name] = v
        return out

    def with_overrides(self, **kw) -> ExperimentConfig:
        d = self.to_dict()
        unknown = set(kw) - set(d)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        d.update(kw)
        return ExperimentConfig.from_dict(d)


@dataclass
class ExperimentRecord:
    experiment: str
    replication: int
    seed: int
    stats: dict[str, Any]
    wall_time: float = 0.0

    def to_json(self, include_timing: bool = False) -> str:
        d = {"experiment": self.experiment, "replication": self.replication,
             "seed": self.seed, "stats": self.stats}
        if include_timing:
            d["wall_time"] = self.wall_time
        return json.dumps(d, sort_keys=True, separators=(",", ":"))


@dataclass
class ExperimentResult:
    name: str
    config: ExperimentConfig
    records: list[ExperimentRecord]
    table: list[dict[str, Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    def jsonl(self) -> str:
        """One record per line, without timings, so reruns are byte-identical."""
        return "".join(r.to_json() + "\n" for r in self.records)

    def summary_csv(self) -> str:
        buf = io.StringIO()
        if self.table:
            cols = list(self.table[0])
            w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            w.writerows(self.table)
        else:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            for k, v in self.summary.items():
                w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
        return buf.getvalue()

    def write(self, directory: str | Path) -> tuple[Path, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        jp = d / f"{self.name}.jsonl"
        cp = d / f"{self.name}_summary.csv"
        jp.write_text(self.jsonl())
        cp.write_text(self.summary_csv())
        return jp, cp

    def column(self, key: str) -> list:
        return [r.stats[key] for r in self.records]


class NotAchieved:
    """Returned by :func:`budget_estimate` when no grid value reaches the target."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NotAchieved"

    def __bool__(self) -> bool:
        return False


NOT_ACHIEVED = NotAchieved()


# -- replication machinery ----------------------------------------------------

class _Context:
    """Per-process state shared by the replications of one run."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.rng = make_rng(0)
        self._lam = cfg.lambda_star

    @property
    def lambda_star(self) -> float:
        if self._lam is None:
            self._lam = malthusian_rate(self.cfg.f).lambda_star
        return self._lam


def _workers(cfg: ExperimentConfig) -> int:
    env = os.environ.get("NETARCH_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"NETARCH_WORKERS must be an integer, got {env!r}") from None
    return cfg.workers


def _run_block(name: str, cfg_dict: dict, start: int, stop: int) -> list[ExperimentRecord]:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    rep = _REPLICATORS[name]
    ctx = _Context(cfg)
    prepare = _PREPARE.get(name)
    if prepare is not None:
        prepare(ctx)
    out = []
    for i in range(start, stop):
        seed = derive_seed(cfg.master_seed, i)
        t0 = time.perf_counter()
        st = rep(ctx, i, seed)
        out.append(ExperimentRecord(name, i, seed, st, time.perf_counter() - t0))
    return out


def _replicate_all(name: str, cfg: ExperimentConfig) -> list[ExperimentRecord]:
    R = cfg.replications
    workers = min(_workers(cfg), R)
    cfg_dict = cfg.to_dict()
    if workers <= 1:
        return _run_block(name, cfg_dict, 0, R)
    blocks = max(workers * 4, 1)
    edges = np.linspace(0, R, blocks + 1).astype(int)
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        parts = pool.map(_run_block, [name] * blocks, [cfg_dict] * blocks,
                         edges[:-1].tolist(), edges[1:].tolist())
        return [rec for part in parts for rec in part]


def _finish(name, cfg, records, table, summary) -> ExperimentResult:
    res = ExperimentResult(name, cfg, records, table, summary)
    if cfg.output:
        res.write(cfg.output)
    return res


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


def _prop_row(key: str, value, count: int, R: int) -> dict:
    lo, hi = wilson_interval(count, R)
    return {key: value, "hit_count": int(count), "R": R, "p_hat": count / R,
            "wilson_lo": lo, "wilson_hi": hi}


# -- root-hit curve and budget ----------------------------------------------------

def _rep_root_rank(ctx, i, seed):
    cfg = ctx.cfg
    deg, _ = grow_arrays(cfg.m, cfg.f, seed, cfg.n, ctx.rng)
    return {"root_rank": root_rank(deg, 0)}


def root_hit_curve(cfg: ExperimentConfig) -> ExperimentResult:
    """Per K on the grid: how often ``v0`` is among the K highest-degree vertices.

    Each replication stores the smallest K whose top-K set contains ``v0``;
    because top-K sets are nested, one number per graph covers the whole grid.
    ``summary`` carries the least-squares slope of log miss probability
    against log K (over grid points with at least one miss).
    """
    _require(cfg.n is not None and cfg.n >= 1, "root_hit_curve needs n >= 1")
    grid = cfg.k_grid or (1,)
    _require(all(1 <= k <= cfg.n + 1 for k in grid), "K grid must lie in [1, n+1]")
    records = _replicate_all("root_hit_curve", cfg)
    ranks = np.array([r.stats["root_rank"] for r in records])
    R = len(records)
    table = []
    for k in grid:
        row = _prop_row("K", int(k), int(np.count_nonzero(ranks <= k)), R)
        row["miss"] = 1.0 - row["p_hat"]
        table.append(row)
    ks = [row["K"] for row in table if 0 < row["miss"]]
    ms = [row["miss"] for row in table if 0 < row["miss"]]
    summary = {"R": R, "mean_rank": float(ranks.mean())}
    if len(ks) >= 2:
        slope, se = ols_slope(np.log(ks), np.log(ms))
        summary.update(miss_slope=slope, miss_slope_se=se)
    return _finish("root_hit_curve", cfg, records, table, summary)


def budget_estimate(cfg: ExperimentConfig, epsilon: float | None = None,
                    curve: ExperimentResult | None = None) -> int | NotAchieved:
    """Smallest grid K whose Wilson lower bound on the hit probability is at least ``1 - epsilon``."""
    eps = cfg.epsilon if epsilon is None else epsilon
    _require(eps is not None and 0 < eps < 1, "epsilon must lie in (0,1)")
    curve = root_hit_curve(cfg) if curve is None else curve
    for row in sorted(curve.table, key=lambda r: r["K"]):
        if row["wilson_lo"] >= 1.0 - eps:
            return int(row["K"])
    return NOT_ACHIEVED


# -- persistence --------------------------------------------------------------

def _rep_persistence(ctx, i, seed):
    cfg = ctx.cfg
    g = EvolvingGraph(cfg.m, cfg.f, seed, capacity=cfg.checkpoints[-1] + 1, rng=ctx.rng)
    tuples = [degree_topk(g, cfg.top_k, root=None).vertices for _ in g.iter_checkpoints(cfg.checkpoints)]
    changed = [j for j in range(1, len(tuples)) if tuples[j] != tuples[j - 1]]
    return {"top": tuples, "changes": len(changed), "last_change": changed[-1] if changed else 0}


def persistence_probe(cfg: ExperimentConfig) -> ExperimentResult:
    """Track the ordered top-K tuple across checkpoints.

    ``last_change`` is the checkpoint index at which the tuple last differed
    from its predecessor (0 when it never changed).
    """
    _require(len(cfg.checkpoints) >= 2, "persistence_probe needs at least two checkpoints")
    _require(cfg.checkpoints[0] >= 1, "checkpoints must be >= 1")
    _require(1 <= cfg.top_k <= cfg.checkpoints[0] + 1, "top_k must fit in the first checkpoint")
    records = _replicate_all("persistence_probe", cfg)
    ch = np.array([r.stats["changes"] for r in records])
    last = np.array([r.stats["last_change"] for r in records])
    table = [{"changes": int(c), "count": int(np.count_nonzero(ch == c))}
             for c in range(len(cfg.checkpoints))]
    summary = {"R": len(records), "median_changes": float(np.median(ch)),
               "mean_changes": float(ch.mean()), "median_last_change": float(np.median(last))}
    return _finish("persistence_probe", cfg, records, table, summary)


# -- the event A_K --------------------------------------------------------------

def _rep_ak(ctx, i, seed):
    cfg = ctx.cfg
    K_max = cfg.k_grid[-1]
    _, edges = grow_arrays(cfg.m, cfg.f, seed, K_max, ctx.rng)
    hits = []
    for K in cfg.k_grid:
        deg = np.bincount(edges[: cfg.m * K].ravel(), minlength=K + 1)
        others = int(np.count_nonzero(deg[1:] >= cfg.d_star))
        hits.append(bool(deg[0] <= cfg.d_star and others >= math.floor(cfg.beta_frac * K)))
    return {"hits": hits}


def event_probability_AK(cfg: ExperimentConfig) -> ExperimentResult:
    """Frequency of: ``deg(v0) <= d*`` in ``G_K`` while at least ``floor(beta_frac*K)`` others reach ``d*``.

    All K on ``k_grid`` are read off one growth run per replication.
    """
    d_star = cfg.d_star if cfg.d_star is not None else cfg.m
    cfg = replace(cfg, d_star=d_star)
    _require(d_star >= cfg.m, "d_star must be >= m")
    _require(0 < cfg.beta_frac <= 1, "beta_frac must lie in (0,1]")
    _require(len(cfg.k_grid) >= 1 and cfg.k_grid[0] >= 1, "k_grid must list sizes K >= 1")
    _require(list(cfg.k_grid) == sorted(cfg.k_grid), "k_grid must be ascending")
    records = _replicate_all("event_probability_AK", cfg)
    hits = np.array([r.stats["hits"] for r in records])
    R = len(records)
    table = [_prop_row("K", int(K), int(hits[:, j].sum()), R) for j, K in enumerate(cfg.k_grid)]
    summary = {"R": R}
    pos = [(row["K"], row["p_hat"]) for row in table if row["p_hat"] > 0]
    if len(pos) >= 2:
        slope, se = ols_slope(np.log([p[0] for p in pos]), np.log([p[1] for p in pos]))
        summary.update(slope=slope, slope_se=se)
    return _finish("event_probability_AK", cfg, records, table, summary)


# -- age of the maximal-degree vertex ------------------------------------------------

def maxdeg_index(degrees) -> int:
    """Oldest vertex among ``v_1 .. v_n`` attaining their maximal degree."""
    deg = np.asarray(degrees)[1:]
    return int(np.argmax(deg)) + 1


def _sizes(cfg):
    return cfg.checkpoints or (cfg.n,)


def _prep_maxdeg(ctx):
    tab = ctx.cfg.f.phi_table
    ctx.kappa = {n: tab.kappa(math.log(n) / ctx.lambda_star) for n in _sizes(ctx.cfg)}


def _rep_maxdeg(ctx, i, seed):
    cfg = ctx.cfg
    sizes = _sizes(cfg)
    g = EvolvingGraph(1, cfg.f, seed, capacity=sizes[-1] + 1, rng=ctx.rng)
    idx, young, ratio = [], [], []
    for n, _ in zip(sizes, g.iter_checkpoints(sizes)):
        k = maxdeg_index(g.degrees)
        idx.append(k)
        young.append(vmax(g))
        ratio.append(math.log(k) / ctx.kappa[n])
    return {"index": idx, "youngest_index": young, "ratio": ratio}


def maxdeg_age_stat(cfg: ExperimentConfig) -> ExperimentResult:
    """``log(I*_n) / K(log(n) / lambda*)`` per replication, at ``n`` or at each checkpoint.

    ``I*_n`` is the birth index of the oldest maximal-degree vertex among
    ``v_1 .. v_n``; the youngest one (``vmax``) is recorded alongside.
    The limit in probability is ``lambda*^2 / 2``.
    """
    _require(cfg.m == 1, "maxdeg_age_stat needs m = 1")
    sizes = _sizes(cfg)
    _require(all(s is not None and s >= 10 for s in sizes), "maxdeg_age_stat needs n >= 10")
    records = _replicate_all("maxdeg_age_stat", cfg)
    ctx = _Context(cfg)
    target = ctx.lambda_star ** 2 / 2
    ratios = np.array([r.stats["ratio"] for r in records])
    table = []
    for j, n in enumerate(sizes):
        q = np.quantile(ratios[:, j], [0.1, 0.25, 0.5, 0.75, 0.9])
        table.append({"n": int(n), "median_ratio": float(q[2]), "q10": float(q[0]), "q25": float(q[1]),
                      "q75": float(q[3]), "q90": float(q[4]), "target": target})
    summary = {"R": len(records), "lambda_star": ctx.lambda_star, "target": target}
    return _finish("maxdeg_age_stat", cfg, records, table, summary)


# -- neighbourhood confidence sets --------------------------------------------------

def _prep_neighborhood(ctx):
    cfg = ctx.cfg
    n = cfg.n
    ctx.radius, ctx.r_n, ctx.bound = [], [], []
    for c1 in cfg.c1:
        r = radius_rn(n, ctx.lambda_star, c1, cfg.f.phi_table)
        ctx.r_n.append(r)
        ctx.radius.append(int(math.ceil(r)))
        try:
            ctx.bound.append(budget_bn(n, r, cfg.f.alpha_bound, ctx.lambda_star))
        except (DomainError, RangeError):
            ctx.bound.append(None)


def _rep_neighborhood(ctx, i, seed):
    cfg = ctx.cfg
    g = EvolvingGraph(1, cfg.f, seed, capacity=cfg.n + 1, rng=ctx.rng).grow_to(cfg.n)
    center = vmax(g)
    dist = bfs_distances(g, center)
    reach = np.bincount(dist[dist >= 0]).cumsum()
    d_root = int(dist[0])
    sizes = [int(reach[min(r, reach.size - 1)]) for r in ctx.radius]
    return {"center": center, "root_distance": d_root,
            "contains": [bool(0 <= d_root <= r) for r in ctx.radius], "size": sizes,
            "eccentricity": int(reach.size - 1)}


def neighborhood_hit(cfg: ExperimentConfig) -> ExperimentResult:
    """Containment of ``v0`` in ``B(vmax, ceil(r_n))`` and the ball size, for each ``c1``."""
    _require(cfg.m == 1, "neighborhood_hit needs m = 1")
    _require(cfg.n is not None and cfg.n >= 3, "neighborhood_hit needs n >= 3")
    _require(len(cfg.c1) >= 1 and all(c >= 0 for c in cfg.c1), "c1 values must be nonnegative")
    records = _replicate_all("neighborhood_hit", cfg)
    ctx = _Context(cfg)
    _prep_neighborhood(ctx)
    contains = np.array([r.stats["contains"] for r in records])
    sizes = np.array([r.stats["size"] for r in records])
    R = len(records)
    table = []
    for j, c1 in enumerate(cfg.c1):
        row = _prop_row("c1", c1, int(contains[:, j].sum()), R)
        q = np.quantile(sizes[:, j], [0.1, 0.5, 0.9])
        b = ctx.bound[j]
        row.update(r_n=ctx.r_n[j], radius=ctx.radius[j], size_q10=float(q[0]),
                   size_median=float(q[1]), size_q90=float(q[2]), b_n=b,
                   frac_size_le_bn=None if b is None else float(np.mean(sizes[:, j] <= b)))
        table.append(row)
    summary = {"R": R, "lambda_star": ctx.lambda_star, "n": cfg.n}
    return _finish("neighborhood_hit", cfg, records, table, summary)


# -- embedding equivalence ------------------------------------------------------------

def _arm(cfg):
    if cfg.arm != "auto":
        return cfg.arm
    return "ctbp" if cfg.m == 1 else "collapsed"


def _rep_embedding(ctx, i, seed):
    cfg = ctx.cfg
    l = cfg.l
    deg_a, _ = grow_arrays(cfg.m, cfg.f, seed, l, ctx.rng)
    seed_b = derive_seed(_stream_seed(cfg.master_seed, 1), i)
    arm = _arm(cfg)
    if arm == "generator":
        deg_b, _ = grow_arrays(cfg.m, cfg.f, seed_b, l, ctx.rng)
    elif arm == "ctbp":
        tree = ctbp.ctbp_simulate(cfg.f, ctbp.VertexCount(l), seed_b, rng=rekey(ctx.rng, seed_b))
        deg_b = ctbp.discrete_view(tree, l).degrees
    elif arm == "collapsed":
        run = ctbp.collapsed_simulate(cfg.f, cfg.m, l, seed_b, rng=rekey(ctx.rng, seed_b))
        deg_b = run.graph(l).degrees
    else:
        raise DomainError(f"unknown arm {arm!r}")
    return {"root_degree": [int(deg_a[0]), int(deg_b[0])],
            "max_degree": [int(deg_a.max()), int(deg_b.max())]}


def embedding_equivalence(cfg: ExperimentConfig) -> ExperimentResult:
    """Two-sample chi-square of root degree and max degree: generator vs. another construction."""
    _require(cfg.l is not None and 1 <= cfg.l <= 30, "embedding_equivalence needs 1 <= l <= 30")
    arm = _arm(cfg)
    _require(arm in ("generator", "ctbp", "collapsed"), f"unknown arm {arm!r}")
    _require(arm != "ctbp" or cfg.m == 1, "the ctbp arm needs m = 1")
    _require(arm != "collapsed" or cfg.m > 1, "the collapsed arm needs m > 1")
    records = _replicate_all("embedding_equivalence", cfg)
    table = []
    for key in ("root_degree", "max_degree"):
        pairs = np.array([r.stats[key] for r in records])
        res = two_sample_chisquare(pairs[:, 0], pairs[:, 1])
        table.append({"statistic_name": key, "arm": arm, "chi2": res["statistic"],
                      "dof": res["dof"], "p_value": res["p_value"], "R": len(records)})
    summary = {"R": len(records), "arm": arm, "l": cfg.l,
               "min_p_value": min(row["p_value"] for row in table)}
    return _finish("embedding_equivalence", cfg, records, table, summary)


# -- T_n drift ----------------------------------------------------------------------

def _rep_tn(ctx, i, seed):
    cfg = ctx.cfg
    x = ctbp.sample_tn_drift(cfg.f, ctx.lambda_star, cfg.n, seed, rng=rekey(ctx.rng, seed))
    return {"drift": x}


def tn_drift_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    _require(cfg.m == 1, "tn_drift_experiment needs m = 1")
    _require(cfg.n is not None and cfg.n >= 2, "tn_drift_experiment needs n >= 2")
    records = _replicate_all("tn_drift_experiment", cfg)
    x = np.array([r.stats["drift"] for r in records])
    q = np.quantile(x, [0.05, 0.25, 0.5, 0.75, 0.95])
    R = x.size
    var = float(x.var(ddof=1)) if R > 1 else 0.0
    summary = {"R": R, "n": cfg.n, "lambda_star": _Context(cfg).lambda_star,
               "mean": float(x.mean()), "variance": var, "se": math.sqrt(var / R),
               "q05": float(q[0]), "q25": float(q[1]), "median": float(q[2]),
               "q75": float(q[3]), "q95": float(q[4])}
    return _finish("tn_drift_experiment", cfg, records, [], summary)


_REPLICATORS: dict[str, Callable] = {
    "root_hit_curve": _rep_root_rank,
    "persistence_probe": _rep_persistence,
    "event_probability_AK": _rep_ak,
    "maxdeg_age_stat": _rep_maxdeg,
    "neighborhood_hit": _rep_neighborhood,
    "embedding_equivalence": _rep_embedding,
    "tn_drift_experiment": _rep_tn,
}

_PREPARE: dict[str, Callable] = {
    "maxdeg_age_stat": _prep_maxdeg,
    "neighborhood_hit": _prep_neighborhood,
}

EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "root_hit_curve": root_hit_curve,
    "persistence_probe": persistence_probe,
    "event_probability_AK": event_probability_AK,
    "maxdeg_age_stat": maxdeg_age_stat,
    "neighborhood_hit": neighborhood_hit,
    "embedding_equivalence": embedding_equivalence,
    "tn_drift_experiment": tn_drift_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Dispatch on ``cfg.experiment``; ``budget_estimate`` adds ``k_hat`` to the curve's summary."""
    if cfg.experiment == "budget_estimate":
        curve = root_hit_curve(replace(cfg, output=None))
        k_hat = budget_estimate(cfg, curve=curve)
        curve.summary["epsilon"] = cfg.epsilon
        curve.summary["k_hat"] = repr(k_hat) if k_hat is NOT_ACHIEVED else k_hat
        curve.name = "budget_estimate"
        if cfg.output:
            curve.write(cfg.output)
        return curve
    try:
        fn = EXPERIMENTS[cfg.experiment]
    except KeyError:
        raise DomainError(f"unknown experiment {cfg.experiment!r}; "
                          f"choose from {sorted(EXPERIMENTS) + ['budget_estimate']}") from None
    return fn(cfg)
