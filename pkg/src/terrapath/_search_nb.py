"""Numba kernels for weighted A* over 8-connected cost grids.

The open list is a hand-rolled binary heap over parallel arrays ordered by
(f asc, g desc, cell index asc) — identical tie-breaking to the python
fallback's (f, -g, index) heapq tuples. Stale heap entries (superseded g or
already closed) are dropped on pop and compacted away if the heap fills.
"""

import math

import numpy as np
from numba import njit

from .grid import NEIGHBOR_DX, NEIGHBOR_DY, STEP_LEN

_DX = NEIGHBOR_DX.copy()
_DY = NEIGHBOR_DY.copy()
_SL = STEP_LEN.copy()


@njit(cache=True)
def _less(f1, g1, i1, f2, g2, i2):
    if f1 != f2:
        return f1 < f2
    if g1 != g2:
        return g1 > g2
    return i1 < i2


@njit(cache=True)
def _sift_up(hf, hg, hi, pos):
    while pos > 0:
        parent = (pos - 1) // 2
        if _less(hf[pos], hg[pos], hi[pos], hf[parent], hg[parent], hi[parent]):
            hf[pos], hf[parent] = hf[parent], hf[pos]
            hg[pos], hg[parent] = hg[parent], hg[pos]
            hi[pos], hi[parent] = hi[parent], hi[pos]
            pos = parent
        else:
            break


@njit(cache=True)
def _sift_down(hf, hg, hi, pos, size):
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _less(hf[right], hg[right], hi[right], hf[left], hg[left], hi[left]):
            best = right
        if _less(hf[best], hg[best], hi[best], hf[pos], hg[pos], hi[pos]):
            hf[pos], hf[best] = hf[best], hf[pos]
            hg[pos], hg[best] = hg[best], hg[pos]
            hi[pos], hi[best] = hi[best], hi[pos]
            pos = best
        else:
            break


@njit(cache=True)
def _compact(hf, hg, hi, size, g, closed):
    """Drop stale entries (closed node or superseded g) and re-heapify."""
    m = 0
    for j in range(size):
        idx = hi[j]
        if not closed[idx] and hg[j] == g[idx]:
            hf[m] = hf[j]
            hg[m] = hg[j]
            hi[m] = hi[j]
            m += 1
    for j in range(m // 2 - 1, -1, -1):
        _sift_down(hf, hg, hi, j, m)
    return m


@njit(cache=True)
def _push(hf, hg, hi, size, f, gval, idx, g, closed):
    if size == hf.shape[0]:
        size = _compact(hf, hg, hi, size, g, closed)
    hf[size] = f
    hg[size] = gval
    hi[size] = idx
    _sift_up(hf, hg, hi, size)
    return size + 1


@njit(cache=True)
def astar_lazy(costs, trav, width, height, start, goal, omega, order_out):
    """A* expanding neighbours on demand.

    costs/trav are flat row-major arrays. Returns (found, g, parent,
    expansions); `order_out` receives the pop order of expanded cells.
    """
    n = costs.shape[0]
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    cap = 4 * n + 64
    hf = np.empty(cap, dtype=np.float64)
    hg = np.empty(cap, dtype=np.float64)
    hi = np.empty(cap, dtype=np.int64)
    size = 0
    gx = goal % width
    gy = goal // width

    g[start] = 0.0
    h0 = math.hypot(float(start % width - gx), float(start // width - gy))
    size = _push(hf, hg, hi, size, h0, 0.0, start, g, closed)
    expansions = 0
    found = False
    while size > 0:
        f = hf[0]
        gu = hg[0]
        u = hi[0]
        size -= 1
        hf[0] = hf[size]
        hg[0] = hg[size]
        hi[0] = hi[size]
        _sift_down(hf, hg, hi, 0, size)
        if closed[u] or gu != g[u]:
            continue
        closed[u] = True
        order_out[expansions] = u
        expansions += 1
        if u == goal:
            found = True
            break
        ux = u % width
        uy = u // width
        cu = costs[u]
        for k in range(8):
            vx = ux + _DX[k]
            vy = uy + _DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if closed[v] or not trav[v]:
                continue
            cand = g[u] + (_SL[k] + omega * (cu + costs[v]))
            if cand < g[v]:
                g[v] = cand
                parent[v] = u
                fv = cand + math.hypot(float(vx - gx), float(vy - gy))
                size = _push(hf, hg, hi, size, fv, cand, v, g, closed)
    return found, g, parent, expansions


@njit(cache=True)
def build_csr(costs, trav, width, height, goal, omega):
    """Materialize the full search graph.

    The graph is CSR adjacency with edge weights plus the per-node search
    state the search phase consumes: g/parent/closed stores, the per-node
    goal heuristic, and the open-list storage. All of it is construction
    work, so it belongs to the graphing phase.
    """
    n = costs.shape[0]
    indptr = np.empty(n + 1, dtype=np.int64)
    nbr = np.empty(8 * n, dtype=np.int64)
    wgt = np.empty(8 * n, dtype=np.float64)
    hgoal = np.empty(n, dtype=np.float64)
    gx = goal % width
    gy = goal // width
    pos = 0
    nodes = 0
    for y in range(height):
        for x in range(width):
            u = y * width + x
            indptr[u] = pos
            if not trav[u]:
                continue
            nodes += 1
            hgoal[u] = math.hypot(float(x - gx), float(y - gy))
            cu = costs[u]
            for k in range(8):
                vx = x + _DX[k]
                vy = y + _DY[k]
                if vx < 0 or vx >= width or vy < 0 or vy >= height:
                    continue
                v = vy * width + vx
                if not trav[v]:
                    continue
                nbr[pos] = v
                wgt[pos] = _SL[k] + omega * (cu + costs[v])
                pos += 1
    indptr[n] = pos
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    cap = 4 * n + 64
    hf = np.empty(cap, dtype=np.float64)
    hg = np.empty(cap, dtype=np.float64)
    hi = np.empty(cap, dtype=np.int64)
    return indptr, nbr, wgt, hgoal, g, parent, closed, hf, hg, hi, nodes


@njit(cache=True)
def astar_csr(indptr, nbr, wgt, hgoal, g, parent, closed, hf, hg, hi, start, goal, order_out):
    """A* over a prebuilt graph (see build_csr)."""
    size = 0
    g[start] = 0.0
    size = _push(hf, hg, hi, size, hgoal[start], 0.0, start, g, closed)
    expansions = 0
    found = False
    while size > 0:
        gu = hg[0]
        u = hi[0]
        size -= 1
        hf[0] = hf[size]
        hg[0] = hg[size]
        hi[0] = hi[size]
        _sift_down(hf, hg, hi, 0, size)
        if closed[u] or gu != g[u]:
            continue
        closed[u] = True
        order_out[expansions] = u
        expansions += 1
        if u == goal:
            found = True
            break
        for e in range(indptr[u], indptr[u + 1]):
            v = nbr[e]
            if closed[v]:
                continue
            cand = g[u] + wgt[e]
            if cand < g[v]:
                g[v] = cand
                parent[v] = u
                size = _push(hf, hg, hi, size, cand + hgoal[v], cand, v, g, closed)
    return found, g, parent, expansions
