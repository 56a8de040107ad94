"""Numba kernels for incremental D*-Lite replanning.

Backward search: g/rhs estimate cost-to-goal, keys bias toward the current
start, and the km offset absorbs start motion. The priority queue is a
binary heap over parallel arrays with per-cell serial stamps for lazy
removal: an entry is live only while its stamp matches the cell's current
serial. Key order is (k1 asc, k2 asc, cell index asc), matching the python
fallback's heapq tuples.
"""

import math

import numpy as np
from numba import njit

from .grid import NEIGHBOR_DX, NEIGHBOR_DY, STEP_LEN

_DX = NEIGHBOR_DX.copy()
_DY = NEIGHBOR_DY.copy()
_SL = STEP_LEN.copy()

STATUS_OK = 0
STATUS_BUDGET = -1


@njit(cache=True)
def _kless(a1, a2, ai, b1, b2, bi):
    if a1 != b1:
        return a1 < b1
    if a2 != b2:
        return a2 < b2
    return ai < bi


@njit(cache=True)
def _sift_up(hk1, hk2, hi, hs, pos):
    while pos > 0:
        parent = (pos - 1) // 2
        if _kless(hk1[pos], hk2[pos], hi[pos], hk1[parent], hk2[parent], hi[parent]):
            hk1[pos], hk1[parent] = hk1[parent], hk1[pos]
            hk2[pos], hk2[parent] = hk2[parent], hk2[pos]
            hi[pos], hi[parent] = hi[parent], hi[pos]
            hs[pos], hs[parent] = hs[parent], hs[pos]
            pos = parent
        else:
            break


@njit(cache=True)
def _sift_down(hk1, hk2, hi, hs, pos, size):
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _kless(
            hk1[right], hk2[right], hi[right], hk1[left], hk2[left], hi[left]
        ):
            best = right
        if _kless(hk1[best], hk2[best], hi[best], hk1[pos], hk2[pos], hi[pos]):
            hk1[pos], hk1[best] = hk1[best], hk1[pos]
            hk2[pos], hk2[best] = hk2[best], hk2[pos]
            hi[pos], hi[best] = hi[best], hi[pos]
            hs[pos], hs[best] = hs[best], hs[pos]
            pos = best
        else:
            break


@njit(cache=True)
def _compact(hk1, hk2, hi, hs, size, serial):
    m = 0
    for j in range(size):
        if hs[j] == serial[hi[j]]:
            hk1[m] = hk1[j]
            hk2[m] = hk2[j]
            hi[m] = hi[j]
            hs[m] = hs[j]
            m += 1
    for j in range(m // 2 - 1, -1, -1):
        _sift_down(hk1, hk2, hi, hs, j, m)
    return m


@njit(cache=True)
def _insert(hk1, hk2, hi, hs, size, serial, u, k1, k2):
    serial[u] += 1
    if size == hk1.shape[0]:
        size = _compact(hk1, hk2, hi, hs, size, serial)
    hk1[size] = k1
    hk2[size] = k2
    hi[size] = u
    hs[size] = serial[u]
    _sift_up(hk1, hk2, hi, hs, size)
    return size + 1


@njit(cache=True)
def _drop_top(hk1, hk2, hi, hs, size):
    size -= 1
    hk1[0] = hk1[size]
    hk2[0] = hk2[size]
    hi[0] = hi[size]
    hs[0] = hs[size]
    _sift_down(hk1, hk2, hi, hs, 0, size)
    return size


@njit(cache=True)
def _peek_valid(hk1, hk2, hi, hs, size, serial):
    """Discard stale top entries; afterwards the top (if any) is live."""
    while size > 0 and hs[0] != serial[hi[0]]:
        size = _drop_top(hk1, hk2, hi, hs, size)
    return size


@njit(cache=True)
def _key(g, rhs, u, width, sx, sy, km):
    m = min(g[u], rhs[u])
    dx = float(u % width - sx)
    dy = float(u // width - sy)
    return m + math.hypot(dx, dy) + km, m


@njit(cache=True)
def _update_vertex(
    g, rhs, costs, trav, serial, hk1, hk2, hi, hs, size, width, height, u, goal, sx, sy, omega, km
):
    if u != goal:
        best = np.inf
        if trav[u]:
            ux = u % width
            uy = u // width
            cu = costs[u]
            for k in range(8):
                vx = ux + _DX[k]
                vy = uy + _DY[k]
                if vx < 0 or vx >= width or vy < 0 or vy >= height:
                    continue
                v = vy * width + vx
                if not trav[v]:
                    continue
                cand = (_SL[k] + omega * (cu + costs[v])) + g[v]
                if cand < best:
                    best = cand
        rhs[u] = best
    if g[u] != rhs[u]:
        k1, k2 = _key(g, rhs, u, width, sx, sy, km)
        size = _insert(hk1, hk2, hi, hs, size, serial, u, k1, k2)
    else:
        serial[u] += 1
    return size


@njit(cache=True)
def _queue_fix(g, rhs, serial, hk1, hk2, hi, hs, size, width, u, sx, sy, km):
    """Re-sync a vertex's queue membership with its consistency."""
    if g[u] != rhs[u]:
        k1, k2 = _key(g, rhs, u, width, sx, sy, km)
        size = _insert(hk1, hk2, hi, hs, size, serial, u, k1, k2)
    else:
        serial[u] += 1
    return size


@njit(cache=True)
def _rescan_rhs(g, rhs, costs, trav, width, height, u, goal, omega):
    if u == goal:
        return
    best = np.inf
    if trav[u]:
        ux = u % width
        uy = u // width
        cu = costs[u]
        for k in range(8):
            vx = ux + _DX[k]
            vy = uy + _DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if not trav[v]:
                continue
            cand = (_SL[k] + omega * (cu + costs[v])) + g[v]
            if cand < best:
                best = cand
    rhs[u] = best


@njit(cache=True)
def compute_shortest_path(
    g, rhs, costs, trav, serial, hk1, hk2, hi, hs, size, width, height, start, goal, omega, km
):
    """Optimized repair loop: when g(u) drops, neighbours take an O(1)
    min-update; full rhs rescans happen only for vertices whose best route
    actually ran through a raised vertex."""
    n = g.shape[0]
    budget = 64 * n + 4096
    iters = 0
    sx = start % width
    sy = start // width
    while True:
        size = _peek_valid(hk1, hk2, hi, hs, size, serial)
        sk1, sk2 = _key(g, rhs, start, width, sx, sy, km)
        start_inconsistent = rhs[start] != g[start]
        if size == 0:
            break
        if not (_kless(hk1[0], hk2[0], hi[0], sk1, sk2, start) or start_inconsistent):
            break
        iters += 1
        if iters > budget:
            return size, STATUS_BUDGET
        k1 = hk1[0]
        k2 = hk2[0]
        u = hi[0]
        size = _drop_top(hk1, hk2, hi, hs, size)
        nk1, nk2 = _key(g, rhs, u, width, sx, sy, km)
        if _kless(k1, k2, u, nk1, nk2, u):
            size = _insert(hk1, hk2, hi, hs, size, serial, u, nk1, nk2)
            continue
        ux = u % width
        uy = u // width
        if g[u] > rhs[u]:
            g[u] = rhs[u]
            gu = g[u]
            if trav[u]:
                cu = costs[u]
                for k in range(8):
                    vx = ux + _DX[k]
                    vy = uy + _DY[k]
                    if vx < 0 or vx >= width or vy < 0 or vy >= height:
                        continue
                    v = vy * width + vx
                    if not trav[v] or v == goal:
                        continue
                    cand = (_SL[k] + omega * (costs[v] + cu)) + gu
                    if cand < rhs[v]:
                        rhs[v] = cand
                        size = _queue_fix(
                            g, rhs, serial, hk1, hk2, hi, hs, size, width, v, sx, sy, km
                        )
        else:
            g_old = g[u]
            g[u] = np.inf
            if trav[u]:
                cu = costs[u]
                for k in range(8):
                    vx = ux + _DX[k]
                    vy = uy + _DY[k]
                    if vx < 0 or vx >= width or vy < 0 or vy >= height:
                        continue
                    v = vy * width + vx
                    if not trav[v] or v == goal:
                        continue
                    if rhs[v] == (_SL[k] + omega * (costs[v] + cu)) + g_old:
                        _rescan_rhs(g, rhs, costs, trav, width, height, v, goal, omega)
                        size = _queue_fix(
                            g, rhs, serial, hk1, hk2, hi, hs, size, width, v, sx, sy, km
                        )
            size = _queue_fix(g, rhs, serial, hk1, hk2, hi, hs, size, width, u, sx, sy, km)
    return size, STATUS_OK


@njit(cache=True)
def init_queue(g, rhs, serial, hk1, hk2, hi, hs, width, start, goal, km):
    g[:] = np.inf
    rhs[:] = np.inf
    rhs[goal] = 0.0
    sx = start % width
    sy = start // width
    k1, k2 = _key(g, rhs, goal, width, sx, sy, km)
    return _insert(hk1, hk2, hi, hs, 0, serial, goal, k1, k2)


@njit(cache=True)
def apply_cost_changes(
    g, rhs, costs, trav, serial, hk1, hk2, hi, hs, size, width, height,
    start, goal, omega, km, changed_idx, changed_cost, affected_idx, threshold,
):
    """Write the new costs, then refresh each affected vertex once.

    `affected_idx` is the deduplicated union of changed cells and their
    neighbours (the only vertices whose rhs can reference a changed edge).
    """
    sx = start % width
    sy = start // width
    for j in range(changed_idx.shape[0]):
        c = changed_idx[j]
        costs[c] = changed_cost[j]
        trav[c] = changed_cost[j] < threshold
    for j in range(affected_idx.shape[0]):
        size = _update_vertex(
            g, rhs, costs, trav, serial, hk1, hk2, hi, hs, size,
            width, height, affected_idx[j], goal, sx, sy, omega, km,
        )
    return size


@njit(cache=True)
def extract_path(g, costs, trav, width, height, start, goal, omega, out):
    """Greedy descent along g from start; returns cell count, -1 no path, -2 loop."""
    n = g.shape[0]
    if not trav[start]:
        return -1
    cur = start
    count = 0
    out[count] = cur
    count += 1
    while cur != goal:
        if count > n:
            return -2
        ux = cur % width
        uy = cur // width
        cu = costs[cur]
        best = np.inf
        bestv = -1
        for k in range(8):
            vx = ux + _DX[k]
            vy = uy + _DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if not trav[v]:
                continue
            cand = (_SL[k] + omega * (cu + costs[v])) + g[v]
            if cand < best:
                best = cand
                bestv = v
        if bestv < 0 or not np.isfinite(best):
            return -1
        cur = bestv
        out[count] = cur
        count += 1
    return count
