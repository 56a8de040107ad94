"""Incremental replanning with D*-Lite.

The planner searches backward from the goal, so after cell costs change or
the start advances, only the affected portion of the search is repaired
instead of replanning from scratch. Step costs, obstacle threshold, and
tie-breaking match the A* planner: for any static map the first plan's
weighted cost equals astar_plan's, and after any change sequence the
replanned cost equals a fresh A* on the updated map.

A planner instance is single-use and single-threaded; it keeps a private
mutable copy of the cost grid, updated through replan(changes=...).
"""

import heapq
import math
import time

import numpy as np

from . import backend
from .grid import NEIGHBOR_DX, NEIGHBOR_DY, STEP_LEN, euclid, in_bounds
from .search import NoPathError, PathStats, PlannerConfig
from .terrain import CostMap

_STATUS_BUDGET = -1


class DstarPlanner:
    """Replanner state plus the current plan (path and PathStats)."""

    def __init__(self, costmap: CostMap, start, goal, cfg: PlannerConfig | None = None):
        cfg = cfg or PlannerConfig()
        self.cfg = cfg
        start = (int(start[0]), int(start[1]))
        goal = (int(goal[0]), int(goal[1]))
        w, h = costmap.width, costmap.height
        if not in_bounds(start, w, h) or not in_bounds(goal, w, h):
            raise ValueError(f"start {start} or goal {goal} out of bounds for {w}x{h} map")
        if start == goal:
            raise ValueError("start and goal must differ")
        self._w = w
        self._h = h
        n = w * h
        self._costs = np.ascontiguousarray(costmap.costs.ravel()).copy()
        self._trav = self._costs < cfg.obstacle_threshold
        if not self._trav[start[1] * w + start[0]]:
            raise NoPathError(f"start cell {start} is untraversable")
        if not self._trav[goal[1] * w + goal[0]]:
            raise NoPathError(f"goal cell {goal} is untraversable")
        self._start = start[1] * w + start[0]
        self._goal = goal[1] * w + goal[0]
        self._km = 0.0
        self._g = np.empty(n, dtype=np.float64)
        self._rhs = np.empty(n, dtype=np.float64)
        self._serial = np.zeros(n, dtype=np.int64)
        self._out = np.empty(n + 2, dtype=np.int64)
        self._use_nb = backend.NUMBA_ENABLED
        if self._use_nb:
            cap = 4 * n + 64
            self._hk1 = np.empty(cap, dtype=np.float64)
            self._hk2 = np.empty(cap, dtype=np.float64)
            self._hi = np.empty(cap, dtype=np.int64)
            self._hs = np.empty(cap, dtype=np.int64)
            self._hsize = 0
        else:
            self._heap: list[tuple[float, float, int, int]] = []
        self.replan_count = 0
        self.last_plan_seconds = 0.0
        self.path: np.ndarray
        self.stats: PathStats

        t0 = time.perf_counter()
        if self._use_nb:
            from . import _dstar_nb

            self._hsize = _dstar_nb.init_queue(
                self._g, self._rhs, self._serial, self._hk1, self._hk2, self._hi, self._hs,
                self._w, self._start, self._goal, self._km,
            )
            self._compute_nb()
        else:
            self._g[:] = np.inf
            self._rhs[:] = np.inf
            self._rhs[self._goal] = 0.0
            self._py_insert(self._goal)
            self._py_compute()
        path = self._extract()
        self.last_plan_seconds = time.perf_counter() - t0
        if path is None:
            raise NoPathError(f"no path from {start} to {goal}")
        self._set_plan(path)

    # -- public surface ----------------------------------------------------

    @property
    def start(self):
        return (self._start % self._w, self._start // self._w)

    @property
    def goal(self):
        return (self._goal % self._w, self._goal // self._w)

    def effective_costmap(self) -> CostMap:
        """Snapshot of the planner's current cell costs."""
        return CostMap(costs=self._costs.reshape(self._h, self._w).copy())

    def replan(self, changes=(), new_start=None) -> np.ndarray:
        """Apply cell-cost changes, move the start, and repair the plan.

        `changes` is an iterable of ((x, y), new_cost), or a pair of arrays
        (cells (n, 2) int, costs (n,) float) for bulk updates. Returns the
        new path; raises NoPathError when the changes disconnect the goal.
        """
        t0 = time.perf_counter()
        if new_start is not None:
            ns = (int(new_start[0]), int(new_start[1]))
            if not in_bounds(ns, self._w, self._h):
                raise ValueError(f"new start {ns} out of bounds")
            if ns != self.start:
                self._km += euclid(self.start, ns)
                self._start = ns[1] * self._w + ns[0]

        if isinstance(changes, tuple) and len(changes) == 2 and isinstance(changes[0], np.ndarray):
            cells = np.asarray(changes[0], dtype=np.int64).reshape(-1, 2)
            new_costs = np.asarray(changes[1], dtype=np.float64).reshape(-1)
        else:
            changes = list(changes)
            cells = np.array([[c[0][0], c[0][1]] for c in changes], dtype=np.int64).reshape(-1, 2)
            new_costs = np.array([c[1] for c in changes], dtype=np.float64)
        if len(cells) != len(new_costs):
            raise ValueError("cell and cost arrays must have matching length")
        if len(cells):
            if (
                cells[:, 0].min() < 0 or cells[:, 0].max() >= self._w
                or cells[:, 1].min() < 0 or cells[:, 1].max() >= self._h
            ):
                raise ValueError("changed cell out of bounds")
            if not np.all(np.isfinite(new_costs)) or new_costs.min() < 0 or new_costs.max() > 1:
                raise ValueError("new costs must lie in [0, 1]")
        idx = cells[:, 1] * self._w + cells[:, 0]
        affected = self._affected_vertices(cells) if len(cells) else idx

        if self._use_nb:
            from . import _dstar_nb

            if len(idx):
                self._hsize = _dstar_nb.apply_cost_changes(
                    self._g, self._rhs, self._costs, self._trav, self._serial,
                    self._hk1, self._hk2, self._hi, self._hs, self._hsize,
                    self._w, self._h, self._start, self._goal, self.cfg.omega, self._km,
                    idx, new_costs, affected, self.cfg.obstacle_threshold,
                )
            self._compute_nb()
        else:
            for i, u in enumerate(idx):
                self._costs[u] = new_costs[i]
                self._trav[u] = new_costs[i] < self.cfg.obstacle_threshold
            for u in affected:
                self._py_update_vertex(int(u))
            self._py_compute()

        path = self._extract()
        self.last_plan_seconds = time.perf_counter() - t0
        self.replan_count += 1
        if path is None:
            raise NoPathError("no path to goal after applying changes")
        self._set_plan(path)
        return self.path

    # -- shared internals ---------------------------------------------------

    def _set_plan(self, path: np.ndarray) -> None:
        self.path = path
        # same arithmetic as path_stats, on the planner's own cost grid
        idx = path[:, 1].astype(np.int64) * self._w + path[:, 0].astype(np.int64)
        c = self._costs[idx]
        dx = np.diff(path[:, 0].astype(np.int64))
        dy = np.diff(path[:, 1].astype(np.int64))
        length = float(np.sqrt((dx * dx + dy * dy).astype(np.float64)).sum())
        cc = float(c.sum())
        tsn = float((c[:-1] + c[1:]).sum())
        self.stats = PathStats(length=length, cc=cc, weighted_cost=length + self.cfg.omega * tsn)

    def _extract(self):
        if self._use_nb:
            from . import _dstar_nb

            count = _dstar_nb.extract_path(
                self._g, self._costs, self._trav, self._w, self._h,
                self._start, self._goal, self.cfg.omega, self._out,
            )
        else:
            count = self._py_extract()
        if count == -2:
            raise RuntimeError("path extraction cycled; cost structure is degenerate")
        if count < 0:
            return None
        idx = self._out[:count]
        cells = np.empty((count, 2), dtype=np.int32)
        cells[:, 0] = idx % self._w
        cells[:, 1] = idx // self._w
        return cells

    def _compute_nb(self) -> None:
        from . import _dstar_nb

        self._hsize, status = _dstar_nb.compute_shortest_path(
            self._g, self._rhs, self._costs, self._trav, self._serial,
            self._hk1, self._hk2, self._hi, self._hs, self._hsize,
            self._w, self._h, self._start, self._goal, self.cfg.omega, self._km,
        )
        if status == _STATUS_BUDGET:
            raise RuntimeError("D*-Lite exceeded its repair budget")

    def _affected_vertices(self, cells: np.ndarray) -> np.ndarray:
        """Deduplicated union of changed cells and their in-bounds neighbours."""
        xs = [cells[:, 0]]
        ys = [cells[:, 1]]
        for k in range(8):
            xs.append(cells[:, 0] + int(NEIGHBOR_DX[k]))
            ys.append(cells[:, 1] + int(NEIGHBOR_DY[k]))
        x = np.concatenate(xs)
        y = np.concatenate(ys)
        ok = (x >= 0) & (x < self._w) & (y >= 0) & (y < self._h)
        return np.unique(y[ok] * self._w + x[ok])

    def _neighbors(self, u: int):
        ux = u % self._w
        uy = u // self._w
        for k in range(8):
            vx = ux + NEIGHBOR_DX[k]
            vy = uy + NEIGHBOR_DY[k]
            if 0 <= vx < self._w and 0 <= vy < self._h:
                yield int(vy * self._w + vx)

    # -- python fallback ----------------------------------------------------

    def _py_key(self, u: int):
        m = min(self._g[u], self._rhs[u])
        sx = self._start % self._w
        sy = self._start // self._w
        return m + math.hypot(float(u % self._w - sx), float(u // self._w - sy)) + self._km, m

    def _py_insert(self, u: int) -> None:
        k1, k2 = self._py_key(u)
        self._serial[u] += 1
        heapq.heappush(self._heap, (k1, k2, u, int(self._serial[u])))

    def _py_update_vertex(self, u: int) -> None:
        if u != self._goal:
            self._py_rescan_rhs(u)
        self._py_queue_fix(u)

    def _py_rescan_rhs(self, u: int) -> None:
        if u == self._goal:
            return
        best = np.inf
        if self._trav[u]:
            ux = u % self._w
            uy = u // self._w
            cu = self._costs[u]
            for k in range(8):
                vx = ux + NEIGHBOR_DX[k]
                vy = uy + NEIGHBOR_DY[k]
                if vx < 0 or vx >= self._w or vy < 0 or vy >= self._h:
                    continue
                v = vy * self._w + vx
                if not self._trav[v]:
                    continue
                cand = (STEP_LEN[k] + self.cfg.omega * (cu + self._costs[v])) + self._g[v]
                if cand < best:
                    best = cand
        self._rhs[u] = best

    def _py_queue_fix(self, u: int) -> None:
        if self._g[u] != self._rhs[u]:
            self._py_insert(u)
        else:
            self._serial[u] += 1

    def _py_compute(self) -> None:
        n = self._g.shape[0]
        budget = 64 * n + 4096
        iters = 0
        g, rhs = self._g, self._rhs
        omega = self.cfg.omega
        s = self._start
        while True:
            top = None
            while self._heap:
                k1, k2, u, st = self._heap[0]
                if st != self._serial[u]:
                    heapq.heappop(self._heap)
                    continue
                top = (k1, k2, u)
                break
            if top is None:
                break
            sk1, sk2 = self._py_key(s)
            kl = (
                top[0] < sk1
                or (top[0] == sk1 and (top[1] < sk2 or (top[1] == sk2 and top[2] < s)))
            )
            if not (kl or rhs[s] != g[s]):
                break
            iters += 1
            if iters > budget:
                raise RuntimeError("D*-Lite exceeded its repair budget")
            k1, k2, u, _ = heapq.heappop(self._heap)
            nk1, nk2 = self._py_key(u)
            if k1 < nk1 or (k1 == nk1 and k2 < nk2):
                self._serial[u] += 1
                heapq.heappush(self._heap, (nk1, nk2, u, int(self._serial[u])))
                continue
            ux = u % self._w
            uy = u // self._w
            if g[u] > rhs[u]:
                g[u] = rhs[u]
                gu = g[u]
                if self._trav[u]:
                    cu = self._costs[u]
                    for k in range(8):
                        vx = ux + NEIGHBOR_DX[k]
                        vy = uy + NEIGHBOR_DY[k]
                        if vx < 0 or vx >= self._w or vy < 0 or vy >= self._h:
                            continue
                        v = vy * self._w + vx
                        if not self._trav[v] or v == self._goal:
                            continue
                        cand = (STEP_LEN[k] + omega * (self._costs[v] + cu)) + gu
                        if cand < rhs[v]:
                            rhs[v] = cand
                            self._py_queue_fix(v)
            else:
                g_old = g[u]
                g[u] = np.inf
                if self._trav[u]:
                    cu = self._costs[u]
                    for k in range(8):
                        vx = ux + NEIGHBOR_DX[k]
                        vy = uy + NEIGHBOR_DY[k]
                        if vx < 0 or vx >= self._w or vy < 0 or vy >= self._h:
                            continue
                        v = vy * self._w + vx
                        if not self._trav[v] or v == self._goal:
                            continue
                        if rhs[v] == (STEP_LEN[k] + omega * (self._costs[v] + cu)) + g_old:
                            self._py_rescan_rhs(v)
                            self._py_queue_fix(v)
                self._py_queue_fix(u)

    def _py_extract(self) -> int:
        n = self._g.shape[0]
        if not self._trav[self._start]:
            return -1
        cur = self._start
        count = 0
        self._out[count] = cur
        count += 1
        while cur != self._goal:
            if count > n:
                return -2
            ux = cur % self._w
            uy = cur // self._w
            cu = self._costs[cur]
            best = np.inf
            bestv = -1
            for k in range(8):
                vx = ux + NEIGHBOR_DX[k]
                vy = uy + NEIGHBOR_DY[k]
                if vx < 0 or vx >= self._w or vy < 0 or vy >= self._h:
                    continue
                v = vy * self._w + vx
                if not self._trav[v]:
                    continue
                cand = (STEP_LEN[k] + self.cfg.omega * (cu + self._costs[v])) + self._g[v]
                if cand < best:
                    best = cand
                    bestv = v
            if bestv < 0 or not np.isfinite(best):
                return -1
            cur = bestv
            self._out[count] = cur
            count += 1
        return count


def dstar_init(costmap: CostMap, start, goal, cfg: PlannerConfig | None = None):
    """Build replanner state and return it with the first planned path."""
    planner = DstarPlanner(costmap, start, goal, cfg)
    return planner, planner.path


def dstar_apply_changes_and_replan(planner: DstarPlanner, changed_cells, new_start=None):
    """Apply ((x, y), new_cost) changes, move the start, and return the new path."""
    return planner.replan(changes=changed_cells, new_start=new_start)
