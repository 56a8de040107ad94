"""Weighted A* planning over 8-connected cost-map grids.

A step from u to v costs euclid(u, v) + omega * (T_u + T_v): straight-line
step length (1 or sqrt(2)) plus the omega-weighted sum of the two cell
costs. The heuristic is plain Euclidean distance to the goal, admissible
because the omega term is non-negative. Cells at or above the obstacle
threshold are excluded, as are cells outside an optional region mask.

`graph_mode="prebuilt"` materializes the full adjacency (CSR) before
searching and reports the graphing/search time split; `"lazy"` expands
neighbours on demand. Ties on f prefer the larger g, then the smaller cell
index, so paths are reproducible across runs and backends.

Planner invocations are single-threaded and single-use; cost maps and masks
are immutable and safe to share between concurrent planners.
"""

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .grid import NEIGHBOR_DX, NEIGHBOR_DY, STEP_LEN, as_cells, in_bounds
from .terrain import CostMap


class NoPathError(RuntimeError):
    """No traversable path exists between the requested endpoints."""


@dataclass(frozen=True)
class PlannerConfig:
    """Planner knobs: traversability weight, obstacle cutoff, graph strategy."""

    omega: float = 0.011
    obstacle_threshold: float = 1.0
    graph_mode: str = "lazy"

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError(f"omega must be non-negative, got {self.omega}")
        if not (0.0 < self.obstacle_threshold <= 1.0):
            raise ValueError(
                f"obstacle_threshold must lie in (0, 1], got {self.obstacle_threshold}"
            )
        if self.graph_mode not in ("lazy", "prebuilt"):
            raise ValueError(f"graph_mode must be 'lazy' or 'prebuilt', got {self.graph_mode!r}")


@dataclass(frozen=True)
class PathStats:
    """Euclidean length, summed cell costs, and the scalarized objective.

    `cc` sums the cost of every path cell once; `weighted_cost` is
    length + omega * sum over steps of (T_k + T_{k+1}), i.e. the quantity
    the planner minimizes (interior cells count twice there).
    """

    length: float
    cc: float
    weighted_cost: float


@dataclass
class SearchTelemetry:
    """Timing split, expansion count, and graph size for one plan."""

    graphing_time: float
    search_time: float
    expansions: int
    graph_nodes: int
    debug: dict | None = field(default=None, repr=False)


def step_cost(costmap: CostMap, frm, to, omega: float) -> float:
    """Cost of one move between 8-adjacent cells."""
    fx, fy = frm
    tx, ty = to
    dx = abs(tx - fx)
    dy = abs(ty - fy)
    if max(dx, dy) != 1:
        raise ValueError(f"cells {frm} and {to} are not 8-adjacent")
    geo = math.sqrt(2.0) if dx == 1 and dy == 1 else 1.0
    return geo + omega * (float(costmap.costs[fy, fx]) + float(costmap.costs[ty, tx]))


def path_stats(path, costmap: CostMap, omega: float, obstacle_threshold: float = 1.0) -> PathStats:
    """Recompute PathStats for a cell path, validating the path invariants."""
    cells = as_cells(path)
    xs = cells[:, 0].astype(np.int64)
    ys = cells[:, 1].astype(np.int64)
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= costmap.width or ys.max() >= costmap.height:
        raise ValueError("path leaves the cost map bounds")
    c = costmap.costs[ys, xs]
    if np.any(c >= obstacle_threshold):
        raise ValueError("path crosses a cell at or above the obstacle threshold")
    if len(cells) == 1:
        return PathStats(length=0.0, cc=float(c[0]), weighted_cost=0.0)
    dx = np.diff(xs)
    dy = np.diff(ys)
    if np.any((np.abs(dx) > 1) | (np.abs(dy) > 1) | ((dx == 0) & (dy == 0))):
        raise ValueError("consecutive path cells must be distinct and 8-adjacent")
    length = float(np.sqrt((dx * dx + dy * dy).astype(np.float64)).sum())
    cc = float(c.sum())
    tsn = float((c[:-1] + c[1:]).sum())
    return PathStats(length=length, cc=cc, weighted_cost=length + omega * tsn)


def _traversable(costmap: CostMap, cfg: PlannerConfig, mask) -> np.ndarray:
    trav = costmap.costs < cfg.obstacle_threshold
    if mask is not None:
        bits = mask.bits if hasattr(mask, "bits") else np.asarray(mask, dtype=bool)
        if bits.shape != costmap.costs.shape:
            raise ValueError(
                f"mask shape {bits.shape} does not match cost map {costmap.costs.shape}"
            )
        trav = trav & bits
    return trav


def _astar_python_lazy(costs, trav, width, height, start, goal, omega, order_out):
    n = costs.shape[0]
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=bool)
    gx = goal % width
    gy = goal // width
    g[start] = 0.0
    h0 = math.hypot(float(start % width - gx), float(start // width - gy))
    heap = [(h0, 0.0, start)]
    expansions = 0
    found = False
    dxs = NEIGHBOR_DX
    dys = NEIGHBOR_DY
    sls = STEP_LEN
    while heap:
        _, neg_gu, u = heapq.heappop(heap)
        if closed[u] or -neg_gu != g[u]:
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
            vx = ux + dxs[k]
            vy = uy + dys[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if closed[v] or not trav[v]:
                continue
            cand = g[u] + (sls[k] + omega * (cu + costs[v]))
            if cand < g[v]:
                g[v] = cand
                parent[v] = u
                fv = cand + math.hypot(float(vx - gx), float(vy - gy))
                heapq.heappush(heap, (fv, -cand, v))
    return found, g, parent, expansions


def _build_csr_python(costs, trav, width, height, goal, omega):
    """Python twin of the numba graph builder: adjacency plus per-node
    search state (g/parent/closed, per-node heuristic)."""
    n = costs.shape[0]
    indptr = np.empty(n + 1, dtype=np.int64)
    nbr = np.empty(8 * n, dtype=np.int64)
    wgt = np.empty(8 * n, dtype=np.float64)
    hgoal = np.empty(n, dtype=np.float64)
    gx = goal % width
    gy = goal // width
    pos = 0
    nodes = 0
    dxs = NEIGHBOR_DX
    dys = NEIGHBOR_DY
    sls = STEP_LEN
    for y in range(height):
        base = y * width
        for x in range(width):
            u = base + x
            indptr[u] = pos
            if not trav[u]:
                continue
            nodes += 1
            hgoal[u] = math.hypot(float(x - gx), float(y - gy))
            cu = costs[u]
            for k in range(8):
                vx = x + dxs[k]
                vy = y + dys[k]
                if vx < 0 or vx >= width or vy < 0 or vy >= height:
                    continue
                v = vy * width + vx
                if not trav[v]:
                    continue
                nbr[pos] = v
                wgt[pos] = sls[k] + omega * (cu + costs[v])
                pos += 1
    indptr[n] = pos
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=bool)
    return indptr, nbr, wgt, hgoal, g, parent, closed, nodes


def _astar_python_csr(indptr, nbr, wgt, hgoal, g, parent, closed, start, goal, order_out):
    g[start] = 0.0
    heap = [(hgoal[start], 0.0, start)]
    expansions = 0
    found = False
    while heap:
        _, neg_gu, u = heapq.heappop(heap)
        if closed[u] or -neg_gu != g[u]:
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
                heapq.heappush(heap, (cand + hgoal[v], -cand, v))
    return found, g, parent, expansions


def _reconstruct(parent, start, goal, width) -> np.ndarray:
    rev = []
    cur = goal
    while cur != -1:
        rev.append(cur)
        if cur == start:
            break
        cur = parent[cur]
    rev.reverse()
    cells = np.empty((len(rev), 2), dtype=np.int32)
    for i, idx in enumerate(rev):
        cells[i, 0] = idx % width
        cells[i, 1] = idx // width
    return cells


def astar_plan(
    costmap: CostMap,
    start,
    goal,
    cfg: PlannerConfig | None = None,
    mask=None,
    capture_debug: bool = False,
):
    """Plan the minimum weighted-cost path from start to goal.

    Returns (path, PathStats, SearchTelemetry). Raises NoPathError when an
    endpoint is blocked (or outside the mask) or no route exists, and
    ValueError for malformed inputs (start == goal, out of bounds).
    """
    cfg = cfg or PlannerConfig()
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    w, h = costmap.width, costmap.height
    if not in_bounds(start, w, h) or not in_bounds(goal, w, h):
        raise ValueError(f"start {start} or goal {goal} out of bounds for {w}x{h} map")
    if start == goal:
        raise ValueError("start and goal must differ")

    t0 = time.perf_counter()
    trav2d = _traversable(costmap, cfg, mask)
    if not trav2d[start[1], start[0]]:
        raise NoPathError(f"start cell {start} is untraversable or outside the mask")
    if not trav2d[goal[1], goal[0]]:
        raise NoPathError(f"goal cell {goal} is untraversable or outside the mask")

    costs = np.ascontiguousarray(costmap.costs.ravel())
    trav = np.ascontiguousarray(trav2d.ravel())
    s = start[1] * w + start[0]
    t = goal[1] * w + goal[0]
    order = np.empty(costs.shape[0], dtype=np.int64)

    use_nb = backend.NUMBA_ENABLED
    if cfg.graph_mode == "prebuilt":
        if use_nb:
            from . import _search_nb

            (indptr, nbr, wgt, hgoal, g0, parent0, closed0, hf, hg, hi, nodes) = (
                _search_nb.build_csr(costs, trav, w, h, t, cfg.omega)
            )
            t1 = time.perf_counter()
            found, g, parent, expansions = _search_nb.astar_csr(
                indptr, nbr, wgt, hgoal, g0, parent0, closed0, hf, hg, hi, s, t, order
            )
        else:
            indptr, nbr, wgt, hgoal, g0, parent0, closed0, nodes = _build_csr_python(
                costs, trav, w, h, t, cfg.omega
            )
            t1 = time.perf_counter()
            found, g, parent, expansions = _astar_python_csr(
                indptr, nbr, wgt, hgoal, g0, parent0, closed0, s, t, order
            )
        t2 = time.perf_counter()
        graph_nodes = int(nodes)
    else:
        t1 = time.perf_counter()
        if use_nb:
            from . import _search_nb

            found, g, parent, expansions = _search_nb.astar_lazy(
                costs, trav, w, h, s, t, cfg.omega, order
            )
        else:
            found, g, parent, expansions = _astar_python_lazy(
                costs, trav, w, h, s, t, cfg.omega, order
            )
        t2 = time.perf_counter()
        graph_nodes = int(expansions)

    if not found:
        raise NoPathError(f"no path from {start} to {goal}")

    path = _reconstruct(parent, s, t, w)
    stats = path_stats(path, costmap, cfg.omega, cfg.obstacle_threshold)
    telemetry = SearchTelemetry(
        graphing_time=t1 - t0,
        search_time=t2 - t1,
        expansions=int(expansions),
        graph_nodes=graph_nodes,
    )
    if capture_debug:
        telemetry.debug = {
            "expansion_order": order[: int(expansions)].copy(),
            "g": g.copy(),
        }
    return path, stats, telemetry
