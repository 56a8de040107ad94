import numpy as np
import pytest

from terrapath.dstar import DstarPlanner, dstar_apply_changes_and_replan, dstar_init
from terrapath.grid import octile
from terrapath.search import NoPathError, PlannerConfig, astar_plan, path_stats
from terrapath.terrain import CostMap, compute_cost_map, synth_terrain

from oracles import random_costmap


def test_first_plan_matches_astar_static():
    cmap = compute_cost_map(synth_terrain(4, 48, 0.9))
    planner, path = dstar_init(cmap, (2, 2), (45, 44))
    _, stats, _ = astar_plan(cmap, (2, 2), (45, 44))
    assert planner.stats.weighted_cost == pytest.approx(stats.weighted_cost, abs=1e-9)
    assert path[0].tolist() == [2, 2] and path[-1].tolist() == [45, 44]


def test_zero_cost_map_octile():
    cm = CostMap(costs=np.zeros((16, 16)))
    planner, _ = dstar_init(cm, (1, 2), (14, 9))
    assert planner.stats.length == pytest.approx(octile((1, 2), (14, 9)), abs=1e-9)


def test_three_random_maps_match_astar():
    rng = np.random.default_rng(8)
    done = 0
    while done < 3:
        costs = random_costmap(rng, 24)
        costs[2, 2] = costs[20, 21] = 0.0
        cm = CostMap(costs=costs)
        try:
            planner, _ = dstar_init(cm, (2, 2), (21, 20))
        except NoPathError:
            continue
        _, stats, _ = astar_plan(cm, (2, 2), (21, 20))
        assert planner.stats.weighted_cost == pytest.approx(stats.weighted_cost, abs=1e-9)
        done += 1


def test_empty_change_set_keeps_cost():
    cmap = compute_cost_map(synth_terrain(6, 32, 0.9))
    planner, path = dstar_init(cmap, (1, 1), (30, 30))
    first = planner.stats.weighted_cost
    again = dstar_apply_changes_and_replan(planner, [], new_start=(1, 1))
    assert planner.stats.weighted_cost == pytest.approx(first, abs=1e-12)
    assert np.array_equal(again, path)


def test_irrelevant_change_keeps_cost():
    cm = CostMap(costs=np.zeros((16, 16)))
    planner, _ = dstar_init(cm, (0, 8), (15, 8))
    first = planner.stats.weighted_cost
    # far corner obstacle, nowhere near the straight path
    planner.replan(changes=[((0, 15), 1.0), ((1, 15), 1.0)])
    assert planner.stats.weighted_cost == pytest.approx(first, abs=1e-12)


def test_blocking_change_matches_fresh_astar():
    cm = CostMap(costs=np.zeros((16, 16)))
    planner, path = dstar_init(cm, (0, 8), (15, 8))
    # wall across the straight route with one gap at the top
    changes = [((8, y), 1.0) for y in range(1, 16)]
    planner.replan(changes=changes)
    costs = np.zeros((16, 16))
    for (x, y), c in changes:
        costs[y, x] = c
    _, fresh, _ = astar_plan(CostMap(costs=costs), (0, 8), (15, 8))
    assert planner.stats.weighted_cost == pytest.approx(fresh.weighted_cost, abs=1e-9)


def test_twenty_random_dynamic_scenarios_match_astar():
    rng = np.random.default_rng(17)
    scenarios = 0
    while scenarios < 20:
        costs = random_costmap(rng, 20, obstacle_frac=0.08)
        costs[1, 1] = costs[18, 18] = 0.0
        cm = CostMap(costs=costs)
        try:
            planner, path = dstar_init(cm, (1, 1), (18, 18))
        except NoPathError:
            continue
        live = costs.copy()
        ok = True
        for round_idx in range(3):
            # block a handful of cells, preferring ones on the current path
            changes = []
            for x, y in path[2:-2][:: max(1, len(path) // 4)][:3]:
                if (x, y) not in ((1, 1), (18, 18)):
                    changes.append(((int(x), int(y)), 1.0))
            extra = rng.integers(0, 20, (4, 2))
            for x, y in extra:
                if (x, y) not in ((1, 1), (18, 18)):
                    changes.append(((int(x), int(y)), float(rng.uniform(0, 1))))
            for (x, y), c in changes:
                live[y, x] = c
            try:
                path = planner.replan(changes=changes)
            except NoPathError:
                assert (
                    astar_fresh_cost(live, (1, 1), (18, 18)) is None
                ), "D* reported no path but fresh A* finds one"
                ok = False
                break
            fresh = astar_fresh_cost(live, (1, 1), (18, 18))
            assert fresh is not None
            assert planner.stats.weighted_cost == pytest.approx(fresh, abs=1e-9)
        if ok:
            scenarios += 1


def astar_fresh_cost(costs, start, goal):
    try:
        _, stats, _ = astar_plan(CostMap(costs=costs), start, goal)
    except NoPathError:
        return None
    return stats.weighted_cost


def test_moving_start_along_path():
    cmap = compute_cost_map(synth_terrain(9, 40, 0.9))
    planner, path = dstar_init(cmap, (1, 1), (38, 38))
    mid = tuple(int(v) for v in path[len(path) // 2])
    replanned = planner.replan(changes=[], new_start=mid)
    _, fresh, _ = astar_plan(cmap, mid, (38, 38))
    assert planner.stats.weighted_cost == pytest.approx(fresh.weighted_cost, abs=1e-9)
    assert tuple(replanned[0]) == mid


def test_replan_validates_inputs():
    cm = CostMap(costs=np.zeros((8, 8)))
    planner, _ = dstar_init(cm, (0, 0), (7, 7))
    with pytest.raises(ValueError):
        planner.replan(changes=[((20, 0), 1.0)])
    with pytest.raises(ValueError):
        planner.replan(changes=[((1, 1), 2.0)])
    with pytest.raises(ValueError):
        planner.replan(changes=[], new_start=(9, 9))


def test_no_path_after_sealing_goal():
    cm = CostMap(costs=np.zeros((8, 8)))
    planner, _ = dstar_init(cm, (0, 0), (7, 7))
    seal = [((x, y), 1.0) for x in (6, 7) for y in (6, 7) if (x, y) != (7, 7)]
    with pytest.raises(NoPathError):
        planner.replan(changes=seal)


def test_stats_reuse_path_stats():
    cmap = compute_cost_map(synth_terrain(14, 32, 0.9))
    planner, path = dstar_init(cmap, (1, 1), (30, 29))
    recomputed = path_stats(path, planner.effective_costmap(), planner.cfg.omega)
    assert planner.stats == recomputed
