"""Compiled inner loops for graph growth and event-driven branching.

Everything here works on plain arrays so that the public classes can keep
their state in numpy buffers and resume a simulation across calls.
"""
import numpy as np
from numba import njit

# status codes returned by run_rounds
COUNT_REACHED = 0
TIME_REACHED = 1
NEED_ROOM = 2
EVENT_CAP = 3


# -- Fenwick tree over vertex weights (1-based, capacity a power of two) --

@njit(cache=True)
def fenwick_add(tree, cap, i, delta):
    i += 1
    while i <= cap:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True)
def fenwick_find(tree, cap, target):
    """Number of leading entries whose cumulative weight is <= target."""
    pos = 0
    rem = target
    bit = cap
    while bit > 0:
        nxt = pos + bit
        if nxt <= cap and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        bit >>= 1
    return pos


@njit(cache=True)
def fenwick_build(weights, cap):
    tree = np.zeros(cap + 1)
    for i in range(weights.size):
        tree[i + 1] += weights[i]
        j = (i + 1) + ((i + 1) & (-(i + 1)))
        if j <= cap:
            tree[j] += tree[i + 1]
    return tree


@njit(cache=True)
def grow_fenwick(tree, cap, deg, w, n_cur, n_target, m, u, edges):
    """Add vertices ``n_cur+1 .. n_target``; ``u`` holds one uniform per edge."""
    e = m * n_cur
    k = 0
    for v in range(n_cur + 1, n_target + 1):
        for _ in range(m):
            target = u[k] * tree[cap]
            k += 1
            t = fenwick_find(tree, cap, target)
            if t > v - 1:
                t = v - 1
            d = deg[t]
            deg[t] = d + 1
            fenwick_add(tree, cap, t, w[d + 1] - w[d])
            edges[e, 0] = v
            edges[e, 1] = t
            e += 1
        deg[v] = m
        fenwick_add(tree, cap, v, w[m])


# -- binary min-heap of (time, node) --

@njit(cache=True)
def _sift_down(ht, hn, size, i):
    t = ht[i]
    nd = hn[i]
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and ht[c + 1] < ht[c]:
            c += 1
        if ht[c] >= t:
            break
        ht[i] = ht[c]
        hn[i] = hn[c]
        i = c
    ht[i] = t
    hn[i] = nd


@njit(cache=True)
def _sift_up(ht, hn, i):
    t = ht[i]
    nd = hn[i]
    while i > 0:
        p = (i - 1) >> 1
        if ht[p] <= t:
            break
        ht[i] = ht[p]
        hn[i] = hn[p]
        i = p
    ht[i] = t
    hn[i] = nd


@njit(cache=True)
def heap_push(ht, hn, size, t, nd):
    ht[size] = t
    hn[size] = nd
    _sift_up(ht, hn, size)
    return size + 1


@njit(cache=True)
def run_rounds(w, m, rng, birth, deg, edges, ht, hn, pending, meta, fmeta,
               max_vertices, t_stop, max_events):
    """Advance the (collapsed) branching process.

    Every existing vertex of degree ``d`` produces its next newborn after an
    Exp(1)/f(d) delay.  Newborns are inert; after ``m`` of them the batch
    collapses into one vertex of degree ``m`` attached to the ``m`` parents.
    With ``m == 1`` this is the plain branching process.

    ``meta = [n_vertices, heap_size, events, n_pending, status]`` and
    ``fmeta = [clock]`` carry the resumable scalar state.
    """
    nv = meta[0]
    hs = meta[1]
    events = meta[2]
    npend = meta[3]
    clock = fmeta[0]
    cap = birth.size
    status = COUNT_REACHED
    while True:
        if nv >= max_vertices:
            status = COUNT_REACHED
            break
        tnext = ht[0]
        if tnext > t_stop:
            status = TIME_REACHED
            break
        if npend == m - 1 and nv >= cap:
            status = NEED_ROOM
            break
        if events >= max_events:
            status = EVENT_CAP
            break
        v = hn[0]
        clock = tnext
        events += 1
        d = deg[v] + 1
        deg[v] = d
        pending[npend] = v
        npend += 1
        ht[0] = clock + rng.standard_exponential() / w[d]
        _sift_down(ht, hn, hs, 0)
        if npend == m:
            birth[nv] = clock
            base = m * nv
            for j in range(m):
                edges[base + j, 0] = nv
                edges[base + j, 1] = pending[j]
            deg[nv] = m
            hs = heap_push(ht, hn, hs, clock + rng.standard_exponential() / w[m], nv)
            nv += 1
            npend = 0
    meta[0] = nv
    meta[1] = hs
    meta[2] = events
    meta[3] = npend
    meta[4] = status
    fmeta[0] = clock
    return status


@njit(cache=True)
def point_process_at(w_shift, t_grid, rng):
    """Counts and running sums of a single reproduction point process.

    The i-th point arrives Exp(1)/w_shift[i] after the (i-1)-th.  Returns
    ``M(t) = sum_{i <= N(t)} 1/w_shift[i] - t`` at each grid time, plus the
    counts ``N(t)``.  ``w_shift`` is 1-based; index 0 is ignored.
    """
    out = np.empty(t_grid.size)
    counts = np.empty(t_grid.size, dtype=np.int64)
    n = 0
    s = 0.0
    t_next = rng.standard_exponential() / w_shift[1]
    for g in range(t_grid.size):
        tg = t_grid[g]
        while t_next <= tg:
            n += 1
            s += 1.0 / w_shift[n]
            if n + 1 >= w_shift.size:
                counts[g] = -1
                return out, counts
            t_next += rng.standard_exponential() / w_shift[n + 1]
        out[g] = s - tg
        counts[g] = n
    return out, counts


@njit(cache=True)
def grow_new(w, m, n, u, cap):
    """Degrees and edges of ``G_n`` built from scratch in one call."""
    tree = np.zeros(cap + 1)
    deg = np.zeros(cap, dtype=np.int64)
    edges = np.zeros((m * cap, 2), dtype=np.int64)
    deg[0] = m
    deg[1] = m
    for j in range(m):
        edges[j, 0] = 1
    fenwick_add(tree, cap, 0, w[m])
    fenwick_add(tree, cap, 1, w[m])
    grow_fenwick(tree, cap, deg, w, 1, n, m, u, edges)
    return deg[: n + 1], edges[: m * n]
