import csv
import io

import numpy as np
import pytest

from terrapath.bench import (
    DEFAULT_OMEGA_GRID,
    DynamicScenario,
    ObstacleTrack,
    bench_masked_vs_full,
    bench_scaling,
    dynamic_sim,
    masked_summary,
    scaling_summary,
    scripted_scenario,
    sweep_omega,
)
from terrapath.dataset import DatasetSpec, generate_sample
from terrapath.rasters import write_nnpr
from terrapath.search import NoPathError, path_stats
from terrapath.terrain import CostMap, compute_cost_map, synth_terrain


def test_sweep_flat_map_tie_rule():
    cm = CostMap(costs=np.zeros((24, 24)))
    sweep = sweep_omega(cm, (1, 1), (22, 20))
    assert np.allclose(sweep.lengths, sweep.lengths[0])
    assert sweep.omega_star == 0.0


def test_sweep_monotone_curves():
    cmap = compute_cost_map(synth_terrain(20, 64, 0.9))
    sweep = sweep_omega(cmap, (2, 2), (61, 60))
    assert np.all(np.diff(sweep.lengths) >= -1e-9)
    assert np.all(np.diff(sweep.tsns) <= 1e-9)
    assert sweep.len_norm.min() >= 0 and sweep.len_norm.max() <= 1
    assert sweep.cc_norm.min() >= 0 and sweep.cc_norm.max() <= 1
    assert sweep.omega_star in sweep.omegas


def test_sweep_validation():
    cm = CostMap(costs=np.zeros((8, 8)))
    with pytest.raises(ValueError):
        sweep_omega(cm, (0, 0), (7, 7), omegas=(0.0, 0.1))
    with pytest.raises(ValueError):
        sweep_omega(cm, (0, 0), (7, 7), omegas=(0.01, 0.02, 0.05))


def test_sweep_deterministic_star():
    cmap = compute_cost_map(synth_terrain(23, 48, 0.9))
    s1 = sweep_omega(cmap, (1, 1), (45, 46))
    s2 = sweep_omega(cmap, (1, 1), (45, 46))
    assert s1.omega_star == s2.omega_star
    assert np.array_equal(s1.lengths, s2.lengths)


def test_bench_scaling_structure():
    report = bench_scaling(sizes=(32, 64, 128), trials=2, seed=1)
    summary = scaling_summary(report)
    assert [s["map_size"] for s in summary] == [32, 64, 128]
    for s in summary:
        assert s["runs"] == 2
    # path length roughly doubles per size doubling
    cells = [s["mean_path_cells"] for s in summary]
    for a, b in zip(cells, cells[1:]):
        assert 1.7 <= b / a <= 2.3
    # graphing dominates search at >= 64
    for s in summary:
        if s["map_size"] >= 64:
            assert s["mean_graphing_seconds"] > s["mean_search_seconds"]


def test_bench_report_csv_round_trip():
    report = bench_scaling(sizes=(32,), trials=1, seed=0)
    text = report.to_csv_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == len(report.rows)
    assert rows[0]["method"] == "Astar"
    assert float(rows[0]["at_seconds"]) > 0


def test_masked_bench_oracle_zero_excess():
    samples = [generate_sample(DatasetSpec(count=8, size=64, seed=21), i) for i in range(8)]
    report = bench_masked_vs_full(samples, region_source="oracle", radius=3)
    summary = masked_summary(report)
    assert summary["pairs"] == 8
    assert summary["success_rate"] == 1.0
    assert summary["mean_cc_excess_pct"] == pytest.approx(0.0, abs=1e-9)
    assert 0 < summary["mean_mm"] <= 1.0


def test_masked_bench_region_files(tmp_path):
    samples = [generate_sample(DatasetSpec(count=4, size=32, seed=33), i) for i in range(4)]
    regions = tmp_path / "regions"
    regions.mkdir()
    from terrapath.regions import oracle_region

    for s in samples:
        prob = oracle_region(s.label, 32, radius=2)
        write_nnpr(regions / f"{s.meta.index:06d}.prob.nnpr", prob.probs.astype(np.float32))
    report = bench_masked_vs_full(samples, region_source=regions, radius=2)
    summary = masked_summary(report)
    assert summary["success_rate"] == 1.0
    assert summary["mean_cc_excess_pct"] == pytest.approx(0.0, abs=1e-6)


def test_masked_bench_missing_region_file(tmp_path):
    samples = [generate_sample(DatasetSpec(count=1, size=32, seed=35), 0)]
    with pytest.raises(FileNotFoundError, match="region file missing"):
        bench_masked_vs_full(samples, region_source=tmp_path)


def test_paired_rows_share_instance():
    samples = [generate_sample(DatasetSpec(count=3, size=48, seed=41), i) for i in range(3)]
    report = bench_masked_vs_full(samples, region_source="oracle")
    full = {r.trial: r for r in report.for_method("Astar")}
    for row in report.for_method("AstarNN"):
        mate = full[row.trial]
        assert row.map_size == mate.map_size
        assert np.array_equal(row.path[0], mate.path[0])
        assert np.array_equal(row.path[-1], mate.path[-1])


def test_report_cc_reproducible_from_paths():
    samples = [generate_sample(DatasetSpec(count=2, size=48, seed=51), i) for i in range(2)]
    report = bench_masked_vs_full(samples, region_source="oracle")
    by_trial = {s.meta.index: s for s in samples}
    for row in report.rows:
        if not row.success:
            continue
        sample = by_trial[row.trial]
        stats = path_stats(row.path, sample.cost, sample.meta.omega)
        assert row.cc == pytest.approx(stats.cc, abs=1e-12)


def test_scenario_validation():
    base = CostMap(costs=np.zeros((16, 16)))
    with pytest.raises(ValueError):
        DynamicScenario(
            base=base,
            obstacles=(ObstacleTrack(rects=((0, 0, 20, 4),)),),
            start=(0, 8),
            goal=(15, 8),
        )
    with pytest.raises(ValueError):
        DynamicScenario(
            base=base,
            obstacles=(ObstacleTrack(rects=((0, 7, 3, 10),)),),
            start=(0, 8),
            goal=(15, 8),
        )


def test_static_scenario_all_methods_agree():
    cmap = compute_cost_map(synth_terrain(61, 64, 0.8))
    rect = (1, 1, 3, 3)  # static corner obstacle away from the corridor
    scen = DynamicScenario(
        base=cmap,
        obstacles=(ObstacleTrack(rects=(rect, rect, rect)),),
        start=(2, 32),
        goal=(61, 32),
        steps_per_replan=30,
    )
    totals = {}
    for method in ("Astar", "AstarNN", "Dstar", "DstarNN"):
        report, executed = dynamic_sim(scen, method)
        totals[method] = sum(r.cc for r in report.rows)
        assert tuple(executed[-1]) == (61, 32)
    vals = list(totals.values())
    assert all(abs(v - vals[0]) < 1e-9 for v in vals)


def test_dynamic_dstar_cc_matches_astar_per_frame():
    scen = scripted_scenario(5, size=128, frames=5)
    rep_a, _ = dynamic_sim(scen, "Astar")
    rep_d, _ = dynamic_sim(scen, "Dstar")
    assert len(rep_a.rows) == len(rep_d.rows)
    for ra, rd in zip(rep_a.rows, rep_d.rows):
        assert rd.cc == pytest.approx(ra.cc, abs=1e-9)


def test_dynamic_nn_variants_faster_with_small_masks():
    scen = scripted_scenario(2, size=256, frames=6, ruggedness=0.6)
    results = {}
    for method in ("Astar", "AstarNN", "Dstar", "DstarNN"):
        report, _ = dynamic_sim(scen, method)
        results[method] = sum(r.at_seconds for r in report.rows)
    assert results["AstarNN"] < results["Astar"]
    assert results["DstarNN"] < results["Dstar"]


def test_executed_path_never_hits_obstacles():
    scen = scripted_scenario(8, size=128, frames=5)
    for method in ("Astar", "Dstar"):
        report, executed = dynamic_sim(scen, method)
        # re-check against the scripted maps frame by frame
        idx = 0
        for frame, row in enumerate(report.rows):
            cmap = scen.costmap_at(frame)
            steps = min(scen.steps_per_replan, len(row.path) - 1)
            if frame == len(report.rows) - 1:
                steps = len(row.path) - 1
            for k in range(1, steps + 1):
                x, y = executed[idx + k]
                assert cmap.costs[y, x] < 1.0
            idx += steps
            if tuple(executed[idx]) == tuple(scen.goal):
                break


def test_dynamic_replan_trigger_on_blocked_path():
    # scripted scenarios are rejected-sampled to include a blocking event
    scen = scripted_scenario(13, size=128, frames=5)
    rep, _ = dynamic_sim(scen, "Astar")
    blocked = 0
    for i, row in enumerate(rep.rows[:-1]):
        nxt = scen.costmap_at(i + 1).costs
        if np.any(nxt[row.path[:, 1], row.path[:, 0]] >= 1.0):
            blocked += 1
    assert blocked >= 1


def test_default_omega_grid_shape():
    assert DEFAULT_OMEGA_GRID[0] == 0.0
    assert len(DEFAULT_OMEGA_GRID) >= 3
    assert list(DEFAULT_OMEGA_GRID) == sorted(DEFAULT_OMEGA_GRID)
    assert max(DEFAULT_OMEGA_GRID) == pytest.approx(0.2)
