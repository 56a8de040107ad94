"""Synthetic training samples with planner-labelled optimal paths.

A sample bundles three equally sized channels (cost map, start encoding,
goal encoding) with the optimal path planned at the dataset's omega as its
label. Generation is deterministic per (seed, index): terrain comes from
the fractal generator, endpoints are drawn uniformly from traversable cells
at least min_separation apart, and endpoint draws are retried (bounded)
until the planner succeeds.

On disk a dataset is one NNPR file and one label text file per sample plus
a JSONL manifest; each line carries sample_path, start, goal, omega, seed,
label_path (and the sample index). Sample generation is embarrassingly
parallel across indices; each file has a single writer.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoding import EncodingConfig, default_sigma, gaussian_encode
from .rasters import read_nnpr, write_nnpr, write_path_text
from .search import NoPathError, PlannerConfig, astar_plan
from .terrain import CostMap, compute_cost_map, synth_terrain

_ENDPOINT_RETRIES = 64


class SampleGenerationError(RuntimeError):
    """Terrain too degenerate to place a solvable start/goal pair."""


@dataclass(frozen=True)
class DatasetSpec:
    """Dataset shape: sample count, square map size, omega, seed, separation.

    `sigma` overrides the size/4 encoding width (exposed for the width
    ablation); `ruggedness` tunes the synthetic terrain.
    """

    count: int
    size: int
    omega: float = 0.011
    seed: int = 0
    min_separation: float | None = None
    ruggedness: float = 0.9
    sigma: float | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.size < 8:
            raise ValueError(f"size must be >= 8, got {self.size}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        sep = self.separation
        if not (0 <= sep < self.size * np.sqrt(2.0)):
            raise ValueError(f"min_separation {sep} must be < size * sqrt(2)")

    @property
    def separation(self) -> float:
        return self.size / 4.0 if self.min_separation is None else self.min_separation

    @property
    def encoding_sigma(self) -> float:
        return default_sigma(self.size) if self.sigma is None else self.sigma


@dataclass(frozen=True)
class SampleMeta:
    seed: int
    index: int
    omega: float
    start: tuple[int, int]
    goal: tuple[int, int]
    sigma: float


@dataclass(frozen=True)
class Sample:
    """One training record: channels, label path, and its raster."""

    cost: CostMap
    start_enc: np.ndarray
    goal_enc: np.ndarray
    label: np.ndarray
    label_raster: np.ndarray
    meta: SampleMeta

    def channels(self) -> np.ndarray:
        """(3, h, w) float32 tensor: cost, start encoding, goal encoding."""
        return np.stack(
            [
                self.cost.costs.astype(np.float32),
                self.start_enc.astype(np.float32),
                self.goal_enc.astype(np.float32),
            ]
        )


def generate_sample(spec: DatasetSpec, index: int) -> Sample:
    """Deterministically generate sample `index` of the dataset."""
    rng = np.random.default_rng([spec.seed, index])
    terrain_seed = int(rng.integers(0, 2**62))
    dem = synth_terrain(terrain_seed, spec.size, spec.ruggedness)
    cost = compute_cost_map(dem)
    cfg = PlannerConfig(omega=spec.omega)
    trav = np.argwhere(cost.costs < cfg.obstacle_threshold)  # rows of (y, x)
    if len(trav) < 2:
        raise SampleGenerationError(f"sample {index}: terrain has <2 traversable cells")

    sep2 = spec.separation**2
    for _ in range(_ENDPOINT_RETRIES):
        i, j = rng.integers(0, len(trav), size=2)
        sy, sx = trav[i]
        gy, gx = trav[j]
        if (sx - gx) ** 2 + (sy - gy) ** 2 < sep2:
            continue
        try:
            path, _, _ = astar_plan(cost, (sx, sy), (gx, gy), cfg)
        except NoPathError:
            continue
        start = (int(sx), int(sy))
        goal = (int(gx), int(gy))
        sigma = spec.encoding_sigma
        enc_cfg = EncodingConfig(sigma=sigma)
        raster = np.zeros((spec.size, spec.size), dtype=bool)
        raster[path[:, 1], path[:, 0]] = True
        return Sample(
            cost=cost,
            start_enc=gaussian_encode(spec.size, start, enc_cfg),
            goal_enc=gaussian_encode(spec.size, goal, enc_cfg),
            label=path,
            label_raster=raster,
            meta=SampleMeta(
                seed=spec.seed, index=index, omega=spec.omega,
                start=start, goal=goal, sigma=sigma,
            ),
        )
    raise SampleGenerationError(
        f"sample {index}: no solvable endpoint pair in {_ENDPOINT_RETRIES} draws"
    )


def write_dataset(spec: DatasetSpec, out_dir) -> Path:
    """Generate and persist the whole dataset; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for index in range(spec.count):
            sample = generate_sample(spec, index)
            sample_path = out / f"{index:06d}.nnpr"
            label_path = out / f"{index:06d}_label.txt"
            write_nnpr(sample_path, sample.channels())
            write_path_text(label_path, sample.label)
            record = {
                "sample_path": sample_path.name,
                "start": list(sample.meta.start),
                "goal": list(sample.meta.goal),
                "omega": spec.omega,
                "seed": spec.seed,
                "label_path": label_path.name,
                "index": index,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return manifest


def load_manifest(manifest_path) -> list[dict]:
    """Parse a dataset manifest; paths are resolved relative to the manifest."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    records = []
    for line in manifest_path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        rec["sample_path"] = str(base / rec["sample_path"])
        rec["label_path"] = str(base / rec["label_path"])
        records.append(rec)
    return records


def load_sample_channels(record: dict) -> np.ndarray:
    """Read a manifest record's (3, h, w) channel tensor."""
    return read_nnpr(record["sample_path"])
