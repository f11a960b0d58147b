"""Sequential growth of degree-driven attachment graphs.

Graph ``G_1`` has vertices ``v0, v1`` joined by ``m`` parallel edges.  Each
later vertex ``v_n`` sends ``m`` edges, one at a time, to existing vertices
chosen with probability proportional to ``f(degree)``; a target's degree is
updated before the next edge of the same arrival is placed, and ``v_n``
itself only becomes a candidate once all of its edges are attached.

Randomness comes from numpy's Philox4x64 counter-based generator seeded with
the 64-bit ``seed``.  Each edge consumes exactly one ``Generator.random()``
variate ``u`` and picks the first vertex (in birth order) whose cumulative
weight exceeds ``u * total``.  That rule is shared by the Fenwick-tree
sampler used in :class:`EvolvingGraph` and by :func:`grow_naive`, so the two
produce identical edge lists on the same seed.
"""
from __future__ import annotations

import functools
import io
import json
import re
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy import sparse

from . import _kernels
from .attachment import AttachmentFunction
from .errors import DomainError, NetarchError

__all__ = [
    "EvolvingGraph",
    "GraphView",
    "make_rng",
    "rekey",
    "generator_new",
    "grow_to",
    "grow_naive",
    "grow_arrays",
    "export_graph",
    "import_graph",
    "ImportedGraph",
    "read_graph",
    "write_graph",
]

EDGELIST_MAGIC = "netarch-edgelist v1"
_UNIFORM_BLOCK = 1 << 20
_HEADER_RE = re.compile(
    r"^netarch-edgelist v1 m=(?P<m>\d+) n=(?P<n>\d+) seed=(?P<seed>-?\d+|none) f=(?P<f>\{.*\})$"
)


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide RNG: Philox4x64 with key ``(seed, 0)`` and a zero counter."""
    return np.random.Generator(np.random.Philox(key=int(seed) % (1 << 64)))


def rekey(rng: np.random.Generator, seed: int) -> np.random.Generator:
    """Reset a Philox-backed generator in place so it replays ``make_rng(seed)``.

    Much cheaper than building a new generator, which matters when a harness
    runs ~10^5 tiny replications.
    """
    bg = rng.bit_generator
    state = {
        "bit_generator": "Philox",
        "state": {"counter": np.zeros(4, dtype=np.uint64),
                  "key": np.array([int(seed) % (1 << 64), 0], dtype=np.uint64)},
        "buffer": np.zeros(4, dtype=np.uint64),
        "buffer_pos": 4,
        "has_uint32": 0,
        "uinteger": 0,
    }
    bg.state = state
    return rng


@functools.lru_cache(maxsize=32)
def _weights(f: AttachmentFunction, size: int) -> np.ndarray:
    w = f.weight_table(size)
    w.flags.writeable = False
    return w


def _pow2_at_least(x: int) -> int:
    return 1 << max(int(x) - 1, 1).bit_length()


class GraphView:
    """Read-only birth-ordered multigraph: vertex count, degrees and edge list.

    ``edges[k] = (child, parent)`` in attachment order.
    """

    def __init__(self, edges, num_vertices: int | None = None):
        self._edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if num_vertices is None:
            num_vertices = int(self._edges.max()) + 1 if self._edges.size else 1
        self._nv = int(num_vertices)
        self._degrees = np.bincount(self._edges.ravel(), minlength=self._nv).astype(np.int64)
        self._adj = None

    @property
    def num_vertices(self) -> int:
        return self._nv

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    def adjacency(self) -> sparse.csr_matrix:
        return _simple_adjacency(self)


def _simple_adjacency(g) -> sparse.csr_matrix:
    """Symmetric 0/1 CSR matrix of the simple-graph skeleton (cached on ``g``)."""
    cached = getattr(g, "_adj", None)
    if cached is not None and cached.shape[0] == g.num_vertices:
        return cached
    e = g.edges
    nv = g.num_vertices
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    adj = sparse.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(nv, nv))
    adj.data[:] = 1
    g._adj = adj
    return adj


class EvolvingGraph:
    """Growing graph ``G_n`` with a Fenwick-tree weight index.

    Attributes ``degrees`` and ``edges`` are views into internal buffers
    and are only valid until the next call to :meth:`grow_to`.
    """

    def __init__(self, m: int, f: AttachmentFunction, seed: int, capacity: int = 64,
                 rng: np.random.Generator | None = None):
        if int(m) != m or m < 1:
            raise DomainError(f"m must be a positive integer, got {m}")
        self.m = int(m)
        self.f = f
        self.seed = int(seed)
        self.rng = make_rng(seed) if rng is None else rekey(rng, seed)
        self.n = 1
        self._cap = 0
        self._deg = np.zeros(0, dtype=np.int64)
        self._edges = np.zeros((0, 2), dtype=np.int64)
        self._tree = np.zeros(1)
        self._adj = None
        self._reserve(max(capacity, 2))
        self._deg[0] = self._deg[1] = self.m
        self._edges[: self.m] = (1, 0)
        _kernels.fenwick_add(self._tree, self._cap, 0, self._w[self.m])
        _kernels.fenwick_add(self._tree, self._cap, 1, self._w[self.m])

    def _reserve(self, vertices: int) -> None:
        if vertices <= self._cap:
            return
        cap = _pow2_at_least(vertices)
        deg = np.zeros(cap, dtype=np.int64)
        deg[: self._deg.size] = self._deg
        edges = np.zeros((self.m * cap, 2), dtype=np.int64)
        edges[: self._edges.shape[0]] = self._edges
        self._w = _weights(self.f, self.m * cap + 2)
        weights = np.where(deg > 0, self._w[deg], 0.0)
        self._tree = _kernels.fenwick_build(weights, cap)
        self._deg, self._edges, self._cap = deg, edges, cap

    # -- views ------------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return self.n + 1

    @property
    def num_edges(self) -> int:
        return self.m * self.n

    @property
    def degrees(self) -> np.ndarray:
        return self._deg[: self.n + 1]

    @property
    def edges(self) -> np.ndarray:
        return self._edges[: self.m * self.n]

    @property
    def total_weight(self) -> float:
        """Current value of the weight index (sum of ``f(degree)``)."""
        return float(self._tree[self._cap])

    def adjacency(self) -> sparse.csr_matrix:
        return _simple_adjacency(self)

    def view(self) -> GraphView:
        """Detached copy that stays valid after further growth."""
        return GraphView(self.edges.copy(), self.num_vertices)

    # -- growth -----------------------------------------------------------

    def grow_to(self, n_target: int, checkpoints: Iterable[int] | None = None,
                snapshot: Callable[[EvolvingGraph], object] | None = None) -> EvolvingGraph:
        """Grow to ``n_target`` arrivals.

        If ``checkpoints`` is given, ``snapshot(self)`` is called whenever the
        graph passes one of those sizes (those below the current size are
        skipped).
        """
        if n_target < self.n:
            raise DomainError(f"cannot shrink from n={self.n} to {n_target}")
        stops = sorted(int(c) for c in checkpoints or () if self.n <= c <= n_target)
        if checkpoints is not None and snapshot is None:
            raise DomainError("checkpoints need a snapshot callback")
        for c in stops:
            self._advance(c)
            snapshot(self)
        self._advance(n_target)
        return self

    def iter_checkpoints(self, sizes: Iterable[int]) -> Iterator[EvolvingGraph]:
        """Yield ``self`` after growing to each size in ``sizes`` (ascending)."""
        last = self.n
        for c in sizes:
            if c < last:
                raise DomainError("checkpoint sizes must be ascending")
            self._advance(int(c))
            last = c
            yield self

    def _advance(self, n_target: int) -> None:
        if n_target <= self.n:
            return
        self._reserve(n_target + 1)
        while self.n < n_target:
            stop = min(n_target, self.n + _UNIFORM_BLOCK // self.m + 1)
            u = self.rng.random(self.m * (stop - self.n))
            _kernels.grow_fenwick(self._tree, self._cap, self._deg, self._w, self.n, stop,
                                  self.m, u, self._edges)
            self.n = stop
        self._adj = None

    # -- serialisation ----------------------------------------------------

    def header(self) -> str:
        return f"{EDGELIST_MAGIC} m={self.m} n={self.n} seed={self.seed} f={self.f.to_json()}"

    def degrees_csv(self) -> str:
        buf = io.StringIO()
        buf.write("vertex,degree\n")
        for v, d in enumerate(self.degrees.tolist()):
            buf.write(f"{v},{d}\n")
        return buf.getvalue()


def generator_new(m: int, f: AttachmentFunction, seed: int) -> EvolvingGraph:
    return EvolvingGraph(m, f, seed)


def grow_to(g: EvolvingGraph, n_target: int, checkpoints=None, snapshot=None) -> EvolvingGraph:
    return g.grow_to(n_target, checkpoints, snapshot)


def grow_arrays(m: int, f: AttachmentFunction, seed: int, n: int,
                rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(degrees, edges)`` of ``G_n`` in one compiled call.

    Same variate stream and output as ``EvolvingGraph(m, f, seed).grow_to(n)``
    with much less per-call overhead; meant for many small replications.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = make_rng(seed) if rng is None else rekey(rng, seed)
    cap = _pow2_at_least(n + 1)
    u = rng.random(m * (n - 1))
    return _kernels.grow_new(_weights(f, m * cap + 2), m, n, u, cap)


def grow_naive(m: int, f: AttachmentFunction, seed: int, n_target: int) -> np.ndarray:
    """Reference sampler: linear cumulative scan per edge, same variate stream."""
    rng = make_rng(seed)
    deg = np.zeros(n_target + 1, dtype=np.int64)
    deg[0] = deg[1] = m
    w = f.weight_table(m * (n_target + 1) + 2)
    edges = [(1, 0)] * m
    for v in range(2, n_target + 1):
        for _ in range(m):
            cum = np.cumsum(w[deg[:v]])
            target = rng.random() * cum[-1]
            t = min(int(np.searchsorted(cum, target, side="right")), v - 1)
            deg[t] += 1
            edges.append((v, t))
        deg[v] = m
    return np.array(edges, dtype=np.int64)


class ImportedGraph(GraphView):
    """Graph read back from an EdgeListV1 file, with its header metadata."""

    def __init__(self, edges, m: int, n: int, seed: int | None, f: AttachmentFunction):
        super().__init__(edges, n + 1)
        self.m, self.n, self.seed, self.f = m, n, seed, f

    def header(self) -> str:
        seed = "none" if self.seed is None else self.seed
        return f"{EDGELIST_MAGIC} m={self.m} n={self.n} seed={seed} f={self.f.to_json()}"

    def replay(self) -> EvolvingGraph:
        """Regenerate the graph from its seed and check it matches the file."""
        if self.seed is None:
            raise NetarchError("graph has no recorded seed")
        g = EvolvingGraph(self.m, self.f, self.seed).grow_to(self.n)
        if not np.array_equal(g.edges, self.edges):
            raise NetarchError("replayed graph differs from the stored edge list")
        return g


def export_graph(g, fmt: str = "EdgeListV1") -> bytes:
    """Serialise to the EdgeListV1 text format (header + ``child parent`` lines)."""
    if fmt != "EdgeListV1":
        raise DomainError(f"unknown export format {fmt!r}")
    if g.n < 1:
        raise DomainError("export needs n >= 1")
    lines = [g.header()]
    lines.extend(f"{c} {p}" for c, p in g.edges.tolist())
    return ("\n".join(lines) + "\n").encode("ascii")


def import_graph(data: bytes | str) -> ImportedGraph:
    text = data.decode("ascii") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines:
        raise DomainError("empty edge list")
    match = _HEADER_RE.match(lines[0])
    if match is None:
        raise DomainError(f"not a {EDGELIST_MAGIC} header: {lines[0][:80]!r}")
    m, n = int(match["m"]), int(match["n"])
    seed = None if match["seed"] == "none" else int(match["seed"])
    f = AttachmentFunction.from_dict(json.loads(match["f"]))
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != m * n:
        raise DomainError(f"expected {m * n} edges, found {len(body)}")
    edges = np.array([ln.split() for ln in body], dtype=np.int64).reshape(-1, 2)
    if np.any(edges < 0) or np.any(edges > n):
        raise DomainError("edge endpoint out of range")
    return ImportedGraph(edges, m, n, seed, f)


def write_graph(g, path: str | Path) -> None:
    Path(path).write_bytes(export_graph(g))


def read_graph(path: str | Path) -> ImportedGraph:
    return import_graph(Path(path).read_bytes())
