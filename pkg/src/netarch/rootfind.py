"""Root-finding confidence sets for birth-ordered graphs.

Every function takes a graph view: any object with ``num_vertices``,
``degrees``, ``edges`` (``(child, parent)`` rows) and ``adjacency()``.
:class:`~netarch.generator.EvolvingGraph` and
:class:`~netarch.generator.GraphView` both qualify.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.sparse import csgraph

from .analytics import budget_bn, radius_rn
from .attachment import AttachmentFunction
from .errors import DomainError, RangeError

__all__ = [
    "ConfidenceSet",
    "degree_topk",
    "root_rank",
    "jordan_scores",
    "jordan_topk",
    "vmax",
    "ball",
    "bfs_distances",
    "neighborhood_confidence_set",
]


@dataclass
class ConfidenceSet:
    method: str
    params: dict
    vertices: list[int]
    predicted_size_bound: float | None = None
    contains_root: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return v in set(self.vertices)

    def to_dict(self) -> dict:
        bound = self.predicted_size_bound
        if bound is not None and not math.isfinite(bound):
            bound = "inf"
        return {
            "method": self.method,
            "params": self.params,
            "vertices": list(self.vertices),
            "size": self.size,
            "predicted_size_bound": bound,
            "contains_root": self.contains_root,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def _contains(vertices, root):
    return None if root is None else bool(root in set(vertices))


def _ordered_by_degree(degrees: np.ndarray) -> np.ndarray:
    """Vertex indices sorted by degree (descending), older first among ties."""
    return np.lexsort((np.arange(degrees.size), -degrees))


def degree_topk(g, K: int, root: int | None = 0) -> ConfidenceSet:
    """The ``K`` highest-degree vertices, older first among ties."""
    nv = g.num_vertices
    if int(K) != K or not 1 <= K <= nv:
        raise DomainError(f"K must lie in [1, {nv}], got {K}")
    deg = np.asarray(g.degrees)
    K = int(K)
    if K < nv // 4:
        # partial selection: everything strictly above the K-th degree plus oldest ties
        kth = np.partition(deg, nv - K)[nv - K]
        cand = np.flatnonzero(deg >= kth)
        members = cand[_ordered_by_degree(deg[cand])][:K]
    else:
        members = _ordered_by_degree(deg)[:K]
    verts = members.tolist()
    return ConfidenceSet("DegreeTopK", {"K": K}, verts, contains_root=_contains(verts, root))


def root_rank(degrees, v: int = 0) -> int:
    """Smallest ``K`` for which ``v`` belongs to :func:`degree_topk` (ties broken oldest first)."""
    deg = np.asarray(degrees)
    d = deg[v]
    return int(np.count_nonzero(deg > d) + np.count_nonzero(deg[:v] == d) + 1)


# -- Jordan centrality -----------------------------------------------------

@njit(cache=True)
def _jordan_kernel(order, pred, n):
    size = np.ones(n, dtype=np.int64)
    best_child = np.zeros(n, dtype=np.int64)
    for j in range(n - 1, 0, -1):
        v = order[j]
        p = pred[v]
        size[p] += size[v]
        if size[v] > best_child[p]:
            best_child[p] = size[v]
    score = np.empty(n, dtype=np.int64)
    for v in range(n):
        up = n - size[v]
        score[v] = up if up > best_child[v] else best_child[v]
    return score


def jordan_scores(g) -> np.ndarray:
    """Largest component size left after deleting each vertex (lower is more central)."""
    nv = g.num_vertices
    edges = np.asarray(g.edges)
    if edges.shape[0] != nv - 1:
        raise DomainError(f"not a tree: {edges.shape[0]} edges on {nv} vertices")
    if nv == 1:
        return np.zeros(1, dtype=np.int64)
    adj = g.adjacency()
    if adj.nnz != 2 * (nv - 1):
        raise DomainError("not a tree: repeated edges present")
    order, pred = csgraph.breadth_first_order(adj, 0, directed=False, return_predecessors=True)
    if order.size != nv:
        raise DomainError("not a tree: graph is disconnected")
    return _jordan_kernel(order.astype(np.int64), pred.astype(np.int64), nv)


def jordan_topk(g, K: int, root: int | None = 0) -> ConfidenceSet:
    """The ``K`` vertices with the smallest Jordan score, older first among ties."""
    nv = g.num_vertices
    if int(K) != K or not 1 <= K <= nv:
        raise DomainError(f"K must lie in [1, {nv}], got {K}")
    s = jordan_scores(g)
    verts = np.lexsort((np.arange(nv), s))[: int(K)].tolist()
    return ConfidenceSet("Jordan", {"K": int(K)}, verts, contains_root=_contains(verts, root))


# -- neighbourhoods of the youngest max-degree vertex ----------------------

def vmax(g) -> int:
    """Youngest vertex attaining the maximum degree."""
    deg = np.asarray(g.degrees)
    return int(deg.size - 1 - np.argmax(deg[::-1]))


def bfs_distances(g, v: int, r_max: int | None = None) -> np.ndarray:
    """Hop distance from ``v`` over the simple skeleton; ``-1`` beyond ``r_max`` or unreachable."""
    nv = g.num_vertices
    if not 0 <= v < nv:
        raise DomainError(f"vertex {v} out of range")
    if r_max is not None and r_max < 0:
        raise DomainError("radius must be nonnegative")
    dist = np.full(nv, -1, dtype=np.int64)
    dist[v] = 0
    limit = nv if r_max is None else int(min(r_max, nv))
    if limit == 0:
        return dist
    adj = g.adjacency()
    indptr, indices = adj.indptr, adj.indices
    frontier = np.array([v], dtype=np.int64)
    for level in range(1, limit + 1):
        starts, stops = indptr[frontier], indptr[frontier + 1]
        lens = stops - starts
        total = int(lens.sum())
        if total == 0:
            break
        idx = np.repeat(stops - lens.cumsum(), lens) + np.arange(total)
        nbrs = np.unique(indices[idx])
        frontier = nbrs[dist[nbrs] < 0]
        if frontier.size == 0:
            break
        dist[frontier] = level
    return dist


def ball(g, v: int, r: int) -> np.ndarray:
    """Sorted vertices within graph distance ``r`` of ``v`` (multi-edges count once)."""
    return np.flatnonzero(bfs_distances(g, v, r) >= 0)


def neighborhood_confidence_set(g, f: AttachmentFunction, c1: float, lambda_star: float,
                                root: int | None = 0, alpha: float | None = None) -> ConfidenceSet:
    """Ball of radius ``ceil(r_n)`` around :func:`vmax`.

    ``predicted_size_bound`` holds ``b_n`` when its formula applies and is
    ``None`` otherwise (small ``n``, an unusable ``alpha``, or a radius of 0).
    """
    n = g.num_vertices - 1
    alpha = f.alpha_bound if alpha is None else alpha
    r_n = radius_rn(n, lambda_star, c1, f.phi_table) if n >= 3 else 0.0
    radius = int(math.ceil(r_n))
    center = vmax(g)
    verts = ball(g, center, radius).tolist()
    try:
        bound = budget_bn(n, r_n, alpha, lambda_star)
    except (DomainError, RangeError, ValueError):
        bound = None
    params = {"c1": c1, "lambda_star": lambda_star, "r_n": r_n, "radius": radius, "center": center}
    return ConfidenceSet("Neighborhood", params, verts, predicted_size_bound=bound,
                         contains_root=_contains(verts, root))
