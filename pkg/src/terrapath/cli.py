"""Command-line interface.

Exit codes: 0 success, 1 no path, 2 bad input (argparse errors included).
Raster inputs are sniffed by magic bytes (NNPR) with ASCII grid fallback;
`--format` selects the output encoding where relevant.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .bench import (
    DEFAULT_OMEGA_GRID,
    bench_masked_vs_full,
    bench_scaling,
    dynamic_sim,
    masked_summary,
    scaling_summary,
    scripted_scenario,
    sweep_omega,
)
from .dataset import DatasetSpec, write_dataset
from .rasters import (
    RasterFormatError,
    read_ascii_grid,
    read_nnpr,
    read_path_text,
    sniff_nnpr,
    write_ascii_grid,
    write_nnpr,
    write_path_text,
)
from .regions import ProbabilityMap, ThresholdPolicy, adaptive_threshold, region_report
from .search import NoPathError, PlannerConfig, astar_plan
from .terrain import CostMap, Dem, TerrainParams, compute_cost_map

EXIT_OK = 0
EXIT_NO_PATH = 1
EXIT_BAD_INPUT = 2


class InputError(Exception):
    """User-supplied file or argument is unusable."""


def _parse_cell(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError(f"expected 'X,Y', got {text!r}")
    try:
        return (int(parts[0]), int(parts[1]))
    except ValueError as exc:
        raise InputError(f"bad cell {text!r}: {exc}") from exc


def _load_grid(path: str) -> tuple[np.ndarray, float]:
    p = Path(path)
    if not p.exists():
        raise InputError(f"file not found: {path}")
    try:
        if sniff_nnpr(p):
            channels = read_nnpr(p)
            return channels[0].astype(np.float64), 1.0
        return read_ascii_grid(p)
    except RasterFormatError as exc:
        raise InputError(str(exc)) from exc


def _load_dem(path: str) -> Dem:
    values, cell_size = _load_grid(path)
    try:
        return Dem(heights=values, cell_size=cell_size)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_costmap(path: str) -> CostMap:
    values, _ = _load_grid(path)
    try:
        return CostMap(costs=np.clip(values, 0.0, 1.0))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_prob(path: str) -> ProbabilityMap:
    values, _ = _load_grid(path)
    try:
        return ProbabilityMap(probs=np.clip(values, 0.0, 1.0))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _write_raster(path: str, values: np.ndarray, fmt: str, cell_size: float = 1.0) -> None:
    if fmt == "ascii":
        write_ascii_grid(path, values, cell_size)
    else:
        write_nnpr(path, values)


def _cmd_cost(args) -> int:
    dem = _load_dem(args.map)
    params = TerrainParams()
    cmap = compute_cost_map(dem, params)
    _write_raster(args.out, cmap.costs, args.format, dem.cell_size)
    print(f"cost map {cmap.width}x{cmap.height} -> {args.out}")
    return EXIT_OK


def _cmd_plan(args) -> int:
    cmap = _load_costmap(args.map)
    cfg = PlannerConfig(omega=args.omega, graph_mode="prebuilt")
    t0 = time.perf_counter()
    path, stats, tel = astar_plan(cmap, _parse_cell(args.start), _parse_cell(args.goal), cfg)
    seconds = time.perf_counter() - t0
    if args.out:
        write_path_text(args.out, path)
    print(
        f"length={stats.length:.6f} cc={stats.cc:.6f} weighted_cost={stats.weighted_cost:.6f} "
        f"cells={len(path)} seconds={seconds:.6f} expansions={tel.expansions}"
    )
    return EXIT_OK


def _cmd_sweep_omega(args) -> int:
    cmap = _load_costmap(args.map)
    omegas = (
        [float(v) for v in args.omegas.split(",")] if args.omegas else DEFAULT_OMEGA_GRID
    )
    sweep = sweep_omega(cmap, _parse_cell(args.start), _parse_cell(args.goal), omegas)
    lines = ["omega,length,cc,len_norm,cc_norm,seconds"]
    for i, omega in enumerate(sweep.omegas):
        lines.append(
            f"{omega},{sweep.lengths[i]},{sweep.ccs[i]},"
            f"{sweep.len_norm[i]},{sweep.cc_norm[i]},{sweep.times[i]}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"omega_star={sweep.omega_star}")
    return EXIT_OK


def _cmd_gen_dataset(args) -> int:
    spec = DatasetSpec(
        count=args.count, size=args.size, omega=args.omega, seed=args.seed, sigma=args.sigma
    )
    manifest = write_dataset(spec, args.out)
    print(f"wrote {args.count} samples -> {manifest}")
    return EXIT_OK


def _cmd_region_plan(args) -> int:
    cmap = _load_costmap(args.map)
    prob = _load_prob(args.prob)
    start = _parse_cell(args.start)
    goal = _parse_cell(args.goal)
    res = adaptive_threshold(prob, start, goal)
    cfg = PlannerConfig(omega=args.omega, graph_mode="prebuilt")
    t0 = time.perf_counter()
    path, stats, _ = astar_plan(cmap, start, goal, cfg, mask=res.mask)
    seconds = time.perf_counter() - t0
    if args.out:
        write_path_text(args.out, path)
    print(
        f"td={res.td} area={res.mask.area} fallback={int(res.fallback)} "
        f"length={stats.length:.6f} cc={stats.cc:.6f} "
        f"weighted_cost={stats.weighted_cost:.6f} seconds={seconds:.6f}"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.mode == "scaling":
        sizes = [int(s) for s in args.sizes.split(",")]
        report = bench_scaling(sizes=sizes, trials=args.trials, seed=args.seed)
        for row in scaling_summary(report):
            print(row)
    else:
        if not args.dataset:
            raise InputError("bench --mode masked needs --dataset MANIFEST")
        report = bench_masked_vs_full(
            args.dataset, region_source=args.regions, trials=args.trials
        )
        print(masked_summary(report))
    if args.out:
        report.write_csv(args.out)
        print(f"rows -> {args.out}")
    return EXIT_OK


def _cmd_dynamic_sim(args) -> int:
    scenario = scripted_scenario(args.seed, size=args.size, frames=args.frames)
    report, executed = dynamic_sim(scenario, args.method, region_source=args.regions)
    total_at = sum(r.at_seconds for r in report.rows)
    total_cc = sum(r.cc for r in report.rows if r.cc is not None)
    for row in report.rows:
        print(
            f"frame={row.frame} method={row.method} at={row.at_seconds:.6f} cc={row.cc:.6f}"
        )
    print(f"all at={total_at:.6f} cc={total_cc:.6f} executed_cells={len(executed)}")
    if args.out:
        report.write_csv(args.out)
        print(f"rows -> {args.out}")
    return EXIT_OK


def _cmd_mm(args) -> int:
    prob = _load_prob(args.prob)
    try:
        label = read_path_text(args.label)
    except RasterFormatError as exc:
        raise InputError(str(exc)) from exc
    start = (int(label[0, 0]), int(label[0, 1]))
    goal = (int(label[-1, 0]), int(label[-1, 1]))
    res = adaptive_threshold(prob, start, goal)
    rep = region_report(label, res)
    print("td,area,mm")
    print(rep.csv_row())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="terrapath",
        description="Terrain-aware grid path planning tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cost", help="convert a DEM to a traversability cost map")
    p.add_argument("--map", required=True, help="DEM raster (NNPR or ASCII grid)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("nnpr", "ascii"), default="nnpr")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("plan", help="plan a path on a cost map")
    p.add_argument("--map", required=True, help="cost map raster")
    p.add_argument("--start", required=True, metavar="X,Y")
    p.add_argument("--goal", required=True, metavar="X,Y")
    p.add_argument("--omega", type=float, default=0.011)
    p.add_argument("--out", help="write the path as text")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("sweep-omega", help="plan across an omega grid and report curves")
    p.add_argument("--map", required=True)
    p.add_argument("--start", required=True, metavar="X,Y")
    p.add_argument("--goal", required=True, metavar="X,Y")
    p.add_argument("--omegas", help="comma-separated grid (default spans 0..0.2)")
    p.add_argument("--out", help="write curves CSV")
    p.set_defaults(func=_cmd_sweep_omega)

    p = sub.add_parser("gen-dataset", help="generate a labelled synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--omega", type=float, default=0.011)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, help="encoding width override (default size/4)")
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("region-plan", help="adaptive-threshold mask then masked plan")
    p.add_argument("--map", required=True)
    p.add_argument("--prob", required=True, help="probability map raster")
    p.add_argument("--start", required=True, metavar="X,Y")
    p.add_argument("--goal", required=True, metavar="X,Y")
    p.add_argument("--omega", type=float, default=0.011)
    p.add_argument("--out", help="write the path as text")
    p.set_defaults(func=_cmd_region_plan)

    p = sub.add_parser("bench", help="scaling or masked-vs-full benchmarks")
    p.add_argument("--mode", choices=("scaling", "masked"), default="scaling")
    p.add_argument("--sizes", default="64,128,256")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset", help="manifest for --mode masked")
    p.add_argument("--regions", default="oracle", help="'oracle' or a region-file directory")
    p.add_argument("--out", help="write rows CSV")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dynamic-sim", help="scripted moving-obstacle simulation")
    p.add_argument("--method", choices=("Astar", "AstarNN", "Dstar", "DstarNN"), default="Dstar")
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--frames", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--regions", default="oracle")
    p.add_argument("--out", help="write rows CSV")
    p.set_defaults(func=_cmd_dynamic_sim)

    p = sub.add_parser("mm", help="region tightness score of a probability map vs a label path")
    p.add_argument("--prob", required=True)
    p.add_argument("--label", required=True, help="path text file")
    p.set_defaults(func=_cmd_mm)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NoPathError as exc:
        print(f"no path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except (InputError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
