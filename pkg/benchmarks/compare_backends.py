"""Compare the numba kernels against the numpy/python fallbacks.

Runs each hot kernel in two subprocesses (TERRAPATH_NUMBA=1 and =0) so each
backend is measured exactly as users get it, and prints a side-by-side
table. Usage: python benchmarks/compare_backends.py [--trials N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _measure(trials: int) -> dict:
    import numpy as np

    import terrapath as tp
    from terrapath.bench import _snap_endpoints, warm_up
    from terrapath.regions import adaptive_threshold, oracle_region
    from terrapath.search import PlannerConfig, astar_plan

    warm_up()
    dem = tp.synth_terrain(11, 256, 0.7)

    def timed(fn):
        best = []
        for _ in range(trials):
            t0 = time.perf_counter()
            fn()
            best.append(time.perf_counter() - t0)
        return float(np.median(best))

    out = {"backend": "numba" if tp.NUMBA_ENABLED else "numpy"}

    out["cost_map_256"] = timed(lambda: tp.compute_cost_map(dem))

    cmap = tp.compute_cost_map(dem)
    start, goal = _snap_endpoints(cmap, (20, 20), (235, 235))
    out["astar_prebuilt_256"] = timed(
        lambda: astar_plan(cmap, start, goal, PlannerConfig(graph_mode="prebuilt"))
    )
    out["astar_lazy_256"] = timed(
        lambda: astar_plan(cmap, start, goal, PlannerConfig(graph_mode="lazy"))
    )

    path, _, _ = astar_plan(cmap, start, goal)
    prob = oracle_region(path, 256, radius=3, blur_sigma=1.5)
    out["adaptive_threshold_256"] = timed(lambda: adaptive_threshold(prob, start, goal))

    small = tp.compute_cost_map(tp.synth_terrain(3, 128, 0.6))
    s2, g2 = _snap_endpoints(small, (6, 64), (121, 64))

    def dstar_cycle():
        planner, _ = tp.dstar_init(small, s2, g2)
        planner.replan(changes=[((64, 60), 1.0), ((64, 61), 1.0), ((64, 62), 1.0)])
        planner.replan(changes=[((64, 60), 0.1)], new_start=(30, 64))

    out["dstar_init_plus_replans_128"] = timed(dstar_cycle)
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.inner:
        print(json.dumps(_measure(args.trials)))
        return 0

    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, TERRAPATH_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, __file__, "--inner", "--trials", str(args.trials)],
            capture_output=True, text=True, env=env,
        )
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            return proc.returncode
        data = json.loads(proc.stdout.strip().splitlines()[-1])
        results[data["backend"]] = data

    if "numba" not in results:
        print("numba backend unavailable; numpy timings only")
        for key, val in results["numpy"].items():
            if key != "backend":
                print(f"{key:32s} {val * 1e3:9.3f} ms")
        return 0

    print(f"{'kernel':32s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for key in results["numba"]:
        if key == "backend":
            continue
        nb = results["numba"][key]
        np_ = results["numpy"][key]
        print(f"{key:32s} {nb * 1e3:8.3f}ms {np_ * 1e3:8.3f}ms {np_ / nb:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
