"""Independent oracles for cross-checking the planners and terrain math.

Everything here is deliberately written from scratch against the problem
statements (normal equations via lstsq, exhaustive Dijkstra, union-find
connectivity, straight-line cost formula) and never calls into the package
kernels it checks.
"""

import heapq
import math

import numpy as np

SQRT2 = math.sqrt(2.0)
OFFSETS = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


def eq1_cost(slope_deg, roughness, elev_diff, max_slope=30.0, max_rough=0.6,
             max_elev=0.2, w_slope=0.6, w_rough=0.2, w_elev=0.2):
    """Straight-line scalar re-statement of the weighted-ratio cost rule."""
    rs = slope_deg / max_slope
    rr = roughness / max_rough
    rf = elev_diff / max_elev
    if rs >= 1.0 or rr >= 1.0 or rf >= 1.0:
        return 1.0
    val = w_slope * min(max(rs, 0.0), 1.0)
    val += w_rough * min(max(rr, 0.0), 1.0)
    val += w_elev * min(max(rf, 0.0), 1.0)
    return min(max(val, 0.0), 1.0)


def lstsq_plane(patch, cell_size=1.0):
    """Fit z = a*x + b*y + c to a 3x3 height patch with numpy lstsq.

    x, y are metric offsets (-cs, 0, cs). Returns (a, b, c, residuals(3,3)).
    """
    patch = np.asarray(patch, dtype=np.float64)
    ys, xs = np.mgrid[-1:2, -1:2]
    a_mat = np.column_stack([
        (xs * cell_size).ravel(),
        (ys * cell_size).ravel(),
        np.ones(9),
    ])
    coeffs, *_ = np.linalg.lstsq(a_mat, patch.ravel(), rcond=None)
    a, b, c = coeffs
    fitted = (a_mat @ coeffs).reshape(3, 3)
    return a, b, c, patch - fitted


def clamped_patch(heights, x, y):
    """3x3 patch around (x, y) with clamped edge replication."""
    h, w = heights.shape
    out = np.empty((3, 3))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            yy = min(max(y + dy, 0), h - 1)
            xx = min(max(x + dx, 0), w - 1)
            out[dy + 1, dx + 1] = heights[yy, xx]
    return out


def features_from_patch(patch, cell_size=1.0):
    """Brute-force slope/roughness/elev-diff from an lstsq plane fit."""
    a, b, _, residuals = lstsq_plane(patch, cell_size)
    slope = math.degrees(math.atan(math.hypot(a, b)))
    roughness = math.sqrt(float(np.mean(residuals**2)))
    elev = float(np.max(np.abs(residuals)))
    return slope, roughness, elev


def dijkstra_weighted_cost(costs, start, goal, omega, threshold=1.0, mask=None):
    """Exhaustive Dijkstra over the 8-connected grid; returns the minimum
    weighted cost (length + omega * sum of paired cell costs) or None."""
    costs = np.asarray(costs, dtype=np.float64)
    h, w = costs.shape
    trav = costs < threshold
    if mask is not None:
        trav = trav & np.asarray(mask, dtype=bool)
    sx, sy = start
    gx, gy = goal
    if not trav[sy, sx] or not trav[gy, gx]:
        return None
    dist = np.full((h, w), np.inf)
    dist[sy, sx] = 0.0
    heap = [(0.0, sy * w + sx)]
    while heap:
        d, u = heapq.heappop(heap)
        uy, ux = divmod(u, w)
        if d > dist[uy, ux]:
            continue
        if (ux, uy) == (gx, gy):
            return d
        for dx, dy in OFFSETS:
            vx, vy = ux + dx, uy + dy
            if not (0 <= vx < w and 0 <= vy < h) or not trav[vy, vx]:
                continue
            step = SQRT2 if dx and dy else 1.0
            nd = d + step + omega * (costs[uy, ux] + costs[vy, vx])
            if nd < dist[vy, vx]:
                dist[vy, vx] = nd
                heapq.heappush(heap, (nd, vy * w + vx))
    return None


def dijkstra_all_costs(costs, source, omega, threshold=1.0):
    """Dijkstra distances from `source` to every cell (for admissibility checks)."""
    costs = np.asarray(costs, dtype=np.float64)
    h, w = costs.shape
    trav = costs < threshold
    dist = np.full((h, w), np.inf)
    sx, sy = source
    dist[sy, sx] = 0.0
    heap = [(0.0, sy * w + sx)]
    while heap:
        d, u = heapq.heappop(heap)
        uy, ux = divmod(u, w)
        if d > dist[uy, ux]:
            continue
        for dx, dy in OFFSETS:
            vx, vy = ux + dx, uy + dy
            if not (0 <= vx < w and 0 <= vy < h) or not trav[vy, vx]:
                continue
            step = SQRT2 if dx and dy else 1.0
            nd = d + step + omega * (costs[uy, ux] + costs[vy, vx])
            if nd < dist[vy, vx]:
                dist[vy, vx] = nd
                heapq.heappush(heap, (nd, vy * w + vx))
    return dist


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def union_find_connected(bits, start, goal):
    """8-connectivity via union-find over all set-bit adjacencies."""
    bits = np.asarray(bits, dtype=bool)
    h, w = bits.shape
    sx, sy = start
    gx, gy = goal
    if not bits[sy, sx] or not bits[gy, gx]:
        return False
    uf = UnionFind(h * w)
    for y in range(h):
        for x in range(w):
            if not bits[y, x]:
                continue
            for dx, dy in OFFSETS:
                vx, vy = x + dx, y + dy
                if 0 <= vx < w and 0 <= vy < h and bits[vy, vx]:
                    uf.union(y * w + x, vy * w + vx)
    return uf.find(sy * w + sx) == uf.find(gy * w + gx)


def random_costmap(rng, size, obstacle_frac=0.15):
    """Random cost grid with a sprinkling of hard obstacles."""
    costs = rng.uniform(0.0, 0.95, (size, size))
    blocked = rng.uniform(size=(size, size)) < obstacle_frac
    costs[blocked] = 1.0
    return costs
