"""Continuous-time branching process embeddings.

An individual that currently has ``j`` children produces its next child after
an independent Exp(1)/f(j+1) delay.  Two independent copies started from
``v0`` and ``v1`` (joined by a root edge) and observed at the arrival times
``T_l`` have the law of the discrete tree sequence ``G_l`` with ``m = 1``.
For ``m > 1`` the collapsed construction lets vertices of degree ``d``
reproduce at rate ``f(d)``; newborns stay inert until ``m`` of them exist,
then merge into a single vertex of degree ``m``.

Both constructions share one compiled event loop driven by a binary heap
of pending birth times, one entry per individual.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from . import _kernels
from .attachment import AttachmentFunction
from .errors import DomainError, ResourceError
from .generator import GraphView, make_rng

__all__ = [
    "CtbpTree",
    "VertexCount",
    "Time",
    "ctbp_simulate",
    "collapsed_simulate",
    "discrete_view",
    "sample_winfty",
    "sample_tn_drift",
    "martingale_path",
    "martingale_samples",
    "DEFAULT_POPULATION_CAP",
]

DEFAULT_POPULATION_CAP = 50_000_000


@dataclass(frozen=True)
class VertexCount:
    """Stop once the population holds ``n + 1`` vertices (two-root) or ``n`` (one root)."""
    n: int


@dataclass(frozen=True)
class Time:
    t: float


@dataclass
class CtbpTree:
    """Snapshot of a simulated branching process.

    ``birth_times[i]`` is the arrival time of vertex ``i`` (so for the
    two-root process ``birth_times[l] = T_l``), ``edges`` lists
    ``(child, parent)`` pairs in birth order (``m`` per vertex past the
    initial ones), ``degrees`` holds the reproduction index of every vertex
    and ``next_birth_time`` its pending birth.  ``events`` counts births.
    """

    m: int
    roots: tuple[int, ...]
    birth_times: np.ndarray
    edges: np.ndarray
    degrees: np.ndarray
    next_birth_time: np.ndarray
    clock: float
    events: int

    @property
    def size(self) -> int:
        return self.birth_times.size

    @property
    def arrival_times(self) -> np.ndarray:
        return self.birth_times

    @property
    def parent(self) -> np.ndarray:
        """Parent of every vertex for ``m = 1`` (``-1`` for initial vertices)."""
        if self.m != 1:
            raise DomainError("parent array is only defined for m = 1")
        par = np.full(self.size, -1, dtype=np.int64)
        par[self.edges[:, 0]] = self.edges[:, 1]
        return par

    @property
    def child_counts(self) -> np.ndarray:
        return self.degrees - self.m

    def event_trace_csv(self) -> str:
        """``time,parent,child`` rows in birth order."""
        buf = io.StringIO()
        buf.write("time,parent,child\n")
        for c, p in self.edges.tolist():
            buf.write(f"{self.birth_times[c]!r},{p},{c}\n")
        return buf.getvalue()


class _Simulation:
    """Resumable state for :func:`_kernels.run_rounds`."""

    def __init__(self, f: AttachmentFunction, m: int, n_roots: int, rng, capacity: int):
        self.f, self.m, self.rng = f, m, rng
        self.cap = 0
        self.birth = np.zeros(0)
        self.deg = np.zeros(0, dtype=np.int64)
        self.edges = np.zeros((0, 2), dtype=np.int64)
        self.ht = np.zeros(0)
        self.hn = np.zeros(0, dtype=np.int64)
        self._reserve(max(capacity, n_roots + 1))
        self.pending = np.zeros(m, dtype=np.int64)
        self.meta = np.zeros(5, dtype=np.int64)
        self.fmeta = np.zeros(1)
        hs = 0
        for r in range(n_roots):
            self.deg[r] = m
            hs = _kernels.heap_push(self.ht, self.hn, hs, rng.standard_exponential() / self.w[m], r)
        self.meta[0] = n_roots
        self.meta[1] = hs
        self.n_roots = n_roots

    def _reserve(self, cap: int) -> None:
        if cap <= self.cap:
            return
        grow = lambda a, shape: np.concatenate([a, np.zeros(shape, dtype=a.dtype)])
        extra = cap - self.cap
        self.birth = grow(self.birth, extra)
        self.deg = grow(self.deg, extra)
        self.edges = grow(self.edges, (self.m * extra, 2))
        self.ht = grow(self.ht, extra)
        self.hn = grow(self.hn, extra)
        self.w = self.f.weight_table(self.m * (cap + 1) + 2)
        self.cap = cap

    def run(self, max_vertices: int, t_stop: float, population_cap: int, max_events: int) -> int:
        while True:
            status = _kernels.run_rounds(self.w, self.m, self.rng, self.birth, self.deg,
                                         self.edges, self.ht, self.hn, self.pending, self.meta,
                                         self.fmeta, max_vertices, t_stop, max_events)
            if status == _kernels.EVENT_CAP:
                raise ResourceError(f"event budget of {max_events} exhausted")
            if status != _kernels.NEED_ROOM:
                return status
            if self.cap >= population_cap:
                raise ResourceError(f"population exceeded the cap of {population_cap}")
            self._reserve(min(2 * self.cap, population_cap))

    def tree(self) -> CtbpTree:
        nv = int(self.meta[0])
        hs = int(self.meta[1])
        nxt = np.full(nv, np.inf)
        nxt[self.hn[:hs]] = self.ht[:hs]
        first = self.m * self.n_roots
        return CtbpTree(
            m=self.m,
            roots=tuple(range(self.n_roots)),
            birth_times=self.birth[:nv].copy(),
            edges=self.edges[first: self.m * nv].copy(),
            degrees=self.deg[:nv].copy(),
            next_birth_time=nxt,
            clock=float(self.fmeta[0]),
            events=int(self.meta[2]),
        )


def _stop_args(stop) -> tuple[int, float]:
    if isinstance(stop, VertexCount):
        if stop.n < 1:
            raise DomainError("VertexCount needs n >= 1")
        return stop.n, math.inf
    if isinstance(stop, Time):
        if not stop.t >= 0:
            raise DomainError("Time needs t >= 0")
        return np.iinfo(np.int64).max, float(stop.t)
    raise DomainError(f"unknown stop rule {stop!r}")


def _simulate(f, m, n_roots, max_vertices, t_stop, rng, population_cap, capacity=None):
    if max_vertices <= n_roots and math.isinf(t_stop):
        capacity = n_roots + 1
    if capacity is None:
        capacity = min(max_vertices, 1024) if max_vertices < np.iinfo(np.int64).max else 1024
    sim = _Simulation(f, m, n_roots, rng, min(capacity, population_cap))
    sim.run(max_vertices, t_stop, population_cap, max_events=population_cap * m + m)
    return sim


def ctbp_simulate(f: AttachmentFunction, stop, seed: int, *, roots: int = 2,
                  population_cap: int = DEFAULT_POPULATION_CAP, rng=None) -> CtbpTree:
    """Simulate the branching process started from ``roots`` individuals.

    With ``VertexCount(n)`` and two roots the run ends at ``T_n`` (``n + 1``
    individuals); with one root it ends when ``n`` individuals exist.  With
    ``Time(t)`` it ends at the last birth not after ``t`` and ``clock``
    reports that birth time.
    """
    if roots not in (1, 2):
        raise DomainError("roots must be 1 or 2")
    target, t_stop = _stop_args(stop)
    if isinstance(stop, VertexCount):
        target = stop.n + 1 if roots == 2 else stop.n
    rng = make_rng(seed) if rng is None else rng
    cap = target if target < np.iinfo(np.int64).max else None
    sim = _simulate(f, 1, roots, target, t_stop, rng, population_cap, capacity=cap)
    return sim.tree()


def discrete_view(tree: CtbpTree, l: int) -> GraphView:
    """Restriction to the first ``l + 1`` individuals plus the root edge ``(1, 0)``."""
    if tree.m != 1 or len(tree.roots) != 2:
        raise DomainError("discrete_view needs a two-root process with m = 1")
    if not 1 <= l <= tree.size - 1:
        raise DomainError(f"l must lie in [1, {tree.size - 1}], got {l}")
    edges = np.concatenate([[[1, 0]], tree.edges[: l - 1]])
    return GraphView(edges, l + 1)


@dataclass
class CollapsedRun:
    """Output of :func:`collapsed_simulate`.

    ``edges`` follows the EdgeListV1 convention: the ``m`` initial edges
    ``(1, 0)`` and then ``m`` edges per collapsed vertex.  ``round_times[l]``
    is the collapse time of vertex ``l`` (``round_times[0] = round_times[1] = 0``).
    """

    m: int
    n: int
    edges: np.ndarray
    round_times: np.ndarray
    events: int

    def graph(self, l: int | None = None) -> GraphView:
        l = self.n if l is None else l
        if not 1 <= l <= self.n:
            raise DomainError(f"l must lie in [1, {self.n}]")
        return GraphView(self.edges[: self.m * l], l + 1)

    @property
    def rounds(self) -> int:
        return self.n - 1


def collapsed_simulate(f: AttachmentFunction, m: int, n_target: int, seed: int,
                       *, rng=None) -> CollapsedRun:
    if int(m) != m or m <= 1:
        raise DomainError("collapsed_simulate needs m > 1; use ctbp_simulate for m = 1")
    if n_target < 1:
        raise DomainError("n_target must be >= 1")
    rng = make_rng(seed) if rng is None else rng
    sim = _simulate(f, m, 2, n_target + 1, math.inf, rng, DEFAULT_POPULATION_CAP,
                    capacity=n_target + 1)
    nv = int(sim.meta[0])
    edges = np.concatenate([np.tile([[1, 0]], (m, 1)), sim.edges[2 * m: m * nv]])
    return CollapsedRun(m=m, n=nv - 1, edges=edges, round_times=sim.birth[:nv].copy(),
                        events=int(sim.meta[2]))


def sample_winfty(f: AttachmentFunction, lambda_star: float, t_max: float, seed: int, *,
                  population_cap: int = DEFAULT_POPULATION_CAP, rng=None) -> float:
    """``exp(-lambda_star * t_max) * |BP_f(t_max)|`` for a single-root process."""
    if not t_max >= 0:
        raise DomainError("t_max must be >= 0")
    rng = make_rng(seed) if rng is None else rng
    sim = _simulate(f, 1, 1, np.iinfo(np.int64).max, float(t_max), rng, population_cap)
    return math.exp(-lambda_star * t_max) * int(sim.meta[0])


def sample_tn_drift(f: AttachmentFunction, lambda_star: float, n: int, seed: int, *,
                    rng=None) -> float:
    """``T_n - log(n) / lambda_star`` from one two-root run."""
    if n < 2:
        raise DomainError("n must be >= 2")
    rng = make_rng(seed) if rng is None else rng
    sim = _simulate(f, 1, 2, n + 1, math.inf, rng, DEFAULT_POPULATION_CAP, capacity=n + 1)
    return float(sim.birth[n]) - math.log(n) / lambda_star


# -- degree martingale -----------------------------------------------------

def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=np.float64).ravel()
    if t.size and (np.any(t < 0) or np.any(np.diff(t) < 0)):
        raise DomainError("t_grid must be nonnegative and nondecreasing")
    return t


def _shifted_weights(f: AttachmentFunction, A: int, size: int) -> np.ndarray:
    w = np.zeros(size + 1)
    w[1:] = f.values_at(np.arange(A + 1, A + size + 1))
    return w


def _martingale_events(f, A, t, rng, weights=None, max_points=1 << 26):
    w = _shifted_weights(f, A, 1024) if weights is None else weights
    while True:
        state = rng.bit_generator.state
        vals, counts = _kernels.point_process_at(w, t, rng)
        if t.size == 0 or counts[-1] >= 0:
            return vals
        if w.size > max_points:
            raise ResourceError(f"point process exceeded {max_points} points")
        # rerun the same path with a longer weight table
        rng.bit_generator.state = state
        w = _shifted_weights(f, A, 4 * (w.size - 1))


def _martingale_linear(f, A, t, rng):
    # f(A+i) = i + (A + beta): the count is a pure birth process with rate N + r,
    # so increments are negative binomial and the running sum is a digamma difference.
    r0 = A + f.beta + 1.0
    out = np.empty(t.size)
    n = 0.0
    prev = 0.0
    for g, tg in enumerate(t):
        dt = tg - prev
        if dt > 0:
            n += _negbin(r0 + n, math.exp(-dt), rng)
        prev = tg
        out[g] = (special.digamma(r0 + n) - special.digamma(r0)) - tg
    return out


def _negbin(r: float, p: float, rng) -> float:
    # Gamma-Poisson mixture; Poisson means beyond 1e15 are replaced by their normal limit
    lam = rng.gamma(r, (1.0 - p) / p) if p < 1 else 0.0
    if lam < 1e15:
        return float(rng.poisson(lam))
    return max(0.0, round(lam + math.sqrt(lam) * rng.standard_normal()))


def _martingale_constant(f, A, t, rng):
    out = np.empty(t.size)
    n = 0
    prev = 0.0
    for g, tg in enumerate(t):
        n += rng.poisson(f.c * (tg - prev))
        prev = tg
        out[g] = n / f.c - tg
    return out


def martingale_path(f: AttachmentFunction, A: int, t_grid: Sequence[float], seed: int, *,
                    method: str = "auto", rng=None) -> np.ndarray:
    """One path of ``M_A(t) = sum_{i <= xi_A(t)} 1/f(A+i) - t`` on ``t_grid``.

    ``method="events"`` samples every point of ``xi_A`` (gaps Exp(1)/f(A+i)).
    ``method="exact"`` jumps between grid times using the closed-form
    transition law, available for linear and constant ``f``; it is the
    only practical route when ``xi_A`` explodes (e.g. linear ``f`` at
    ``t = 100``).  ``"auto"`` picks ``exact`` when available.
    """
    if int(A) != A or A < 0:
        raise DomainError("A must be a nonnegative integer")
    t = _check_grid(t_grid)
    rng = make_rng(seed) if rng is None else rng
    if method == "auto":
        method = "exact" if f.kind in ("linear", "constant") else "events"
    if method == "events":
        return _martingale_events(f, int(A), t, rng)
    if method == "exact":
        if f.kind == "linear":
            return _martingale_linear(f, int(A), t, rng)
        if f.kind == "constant":
            return _martingale_constant(f, int(A), t, rng)
        raise DomainError(f"no closed-form transition law for kind {f.kind!r}")
    raise DomainError(f"unknown method {method!r}")


def martingale_samples(f: AttachmentFunction, A: int, t_grid: Sequence[float], n_paths: int,
                       seed: int, *, method: str = "events") -> np.ndarray:
    """``n_paths`` independent paths from one RNG stream, shape ``(n_paths, len(t_grid))``."""
    rng = make_rng(seed)
    t = _check_grid(t_grid)
    out = np.empty((n_paths, t.size))
    if method == "events":
        if int(A) != A or A < 0:
            raise DomainError("A must be a nonnegative integer")
        w = _shifted_weights(f, int(A), 1024)
        for i in range(n_paths):
            out[i] = _martingale_events(f, int(A), t, rng, w)
        return out
    for i in range(n_paths):
        out[i] = martingale_path(f, A, t, seed, method=method, rng=rng)
    return out
