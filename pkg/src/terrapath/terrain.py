"""Elevation rasters to traversability cost maps.

Each cell gets a cost in [0, 1] from three geomorphic features of the 3x3
patch centred on it: the slope of the least-squares plane, the RMS plane-fit
residual (roughness), and the largest absolute deviation of a patch point
from the plane (worst local obstacle). Feature/limit ratios are clamped to
[0, 1] and blended with weights summing to 1; if any raw ratio reaches 1 the
cell is untraversable and costs exactly 1.0.

Border patches are completed by clamped edge replication, so the cost map
covers the full raster. All types are immutable and the operations are pure,
so cell evaluation is safe to parallelize externally.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend


def _freeze(arr: np.ndarray) -> np.ndarray:
    # Copy before locking: never flip the writeable flag on a caller's array.
    out = arr.copy(order="C")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dem:
    """Height raster (metres) with a physical cell size (metres per cell)."""

    heights: np.ndarray
    cell_size: float = 1.0

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=np.float64)
        if h.ndim != 2:
            raise ValueError(f"heights must be 2D, got shape {h.shape}")
        if h.shape[0] < 3 or h.shape[1] < 3:
            raise ValueError(f"DEM must be at least 3x3 for patch fitting, got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("DEM heights must be finite")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "heights", _freeze(h))

    @property
    def width(self) -> int:
        return self.heights.shape[1]

    @property
    def height(self) -> int:
        return self.heights.shape[0]


@dataclass(frozen=True)
class TerrainParams:
    """Traversability limits and blend weights.

    Defaults: 30 degree slope limit, 0.2 m obstacle limit, 0.6 roughness
    limit, weights 0.6/0.2/0.2 (slope/roughness/obstacle). Weights must sum
    to 1 and all limits must be strictly positive.
    """

    max_slope_deg: float = 30.0
    max_height_diff: float = 0.2
    max_roughness: float = 0.6
    slope_weight: float = 0.6
    roughness_weight: float = 0.2
    height_weight: float = 0.2

    def __post_init__(self):
        for name in ("max_slope_deg", "max_height_diff", "max_roughness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        total = self.slope_weight + self.roughness_weight + self.height_weight
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")
        for name in ("slope_weight", "roughness_weight", "height_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CellFeatures:
    """Per-cell patch features: slope (degrees), RMS residual, max |residual| (m)."""

    slope_deg: float
    roughness: float
    elev_diff: float


@dataclass(frozen=True)
class CostMap:
    """Per-cell traversability cost in [0, 1]; 1.0 marks untraversable cells."""

    costs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError(f"costs must be 2D, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("costs must be finite")
        if c.size and (c.min() < 0.0 or c.max() > 1.0):
            raise ValueError("costs must lie in [0, 1]")
        object.__setattr__(self, "costs", _freeze(c))

    @property
    def width(self) -> int:
        return self.costs.shape[1]

    @property
    def height(self) -> int:
        return self.costs.shape[0]


def _fit_patch(heights: np.ndarray, cell_size: float, x: int, y: int):
    """Least-squares plane z = a*X + b*Y + c over the clamped 3x3 patch.

    X, Y are metric offsets from the patch centre. The symmetric 3x3 offset
    grid makes the normal equations diagonal, so the fit is closed form.
    Returns (a, b, c, residuals) with residuals the (3, 3) vertical
    deviations in patch order.
    """
    h, w = heights.shape
    sum_z = 0.0
    sum_dxz = 0.0
    sum_dyz = 0.0
    for dy in (-1, 0, 1):
        yy = min(max(y + dy, 0), h - 1)
        for dx in (-1, 0, 1):
            xx = min(max(x + dx, 0), w - 1)
            z = heights[yy, xx]
            sum_z += z
            sum_dxz += dx * z
            sum_dyz += dy * z
    a = sum_dxz / (6.0 * cell_size)
    b = sum_dyz / (6.0 * cell_size)
    c = sum_z / 9.0
    residuals = np.empty((3, 3), dtype=np.float64)
    for dy in (-1, 0, 1):
        yy = min(max(y + dy, 0), h - 1)
        for dx in (-1, 0, 1):
            xx = min(max(x + dx, 0), w - 1)
            fitted = a * dx * cell_size + b * dy * cell_size + c
            residuals[dy + 1, dx + 1] = heights[yy, xx] - fitted
    return a, b, c, residuals


def fit_patch_plane(dem: Dem, cell) -> tuple[np.ndarray, float, np.ndarray]:
    """Fit the 3x3 patch plane around `cell` (borders use clamped replication).

    Returns (unit_normal, offset, residuals). The normal always has a
    positive vertical component; the plane is {p : normal . p = offset} in
    patch-local metric coordinates with origin at the cell centre. Residuals
    are the vertical deviations of the 9 patch points.
    """
    x, y = cell
    if not (0 <= x < dem.width and 0 <= y < dem.height):
        raise ValueError(f"cell {cell} out of bounds for {dem.width}x{dem.height} DEM")
    a, b, c, residuals = _fit_patch(dem.heights, dem.cell_size, x, y)
    norm = math.sqrt(a * a + b * b + 1.0)
    normal = np.array([-a / norm, -b / norm, 1.0 / norm])
    offset = c / norm
    return normal, offset, residuals


def compute_cell_features(dem: Dem, cell) -> CellFeatures:
    """Slope/roughness/obstacle-height features of one cell's patch."""
    x, y = cell
    if not (0 <= x < dem.width and 0 <= y < dem.height):
        raise ValueError(f"cell {cell} out of bounds for {dem.width}x{dem.height} DEM")
    a, b, _, residuals = _fit_patch(dem.heights, dem.cell_size, x, y)
    slope = math.degrees(math.atan(math.hypot(a, b)))
    roughness = math.sqrt(float(np.mean(residuals * residuals)))
    elev_diff = float(np.max(np.abs(residuals)))
    return CellFeatures(slope_deg=slope, roughness=roughness, elev_diff=elev_diff)


def _feature_grids_numpy(heights: np.ndarray, cell_size: float):
    h, w = heights.shape
    zp = np.pad(heights, 1, mode="edge")
    sum_z = np.zeros((h, w))
    sum_dxz = np.zeros((h, w))
    sum_dyz = np.zeros((h, w))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            z = zp[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
            sum_z = sum_z + z
            if dx:
                sum_dxz = sum_dxz + dx * z
            if dy:
                sum_dyz = sum_dyz + dy * z
    a = sum_dxz / (6.0 * cell_size)
    b = sum_dyz / (6.0 * cell_size)
    c = sum_z / 9.0
    sq = np.zeros((h, w))
    mx = np.zeros((h, w))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            z = zp[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
            res = z - (a * (dx * cell_size) + b * (dy * cell_size) + c)
            sq = sq + res * res
            np.maximum(mx, np.abs(res), out=mx)
    slope = np.degrees(np.arctan(np.hypot(a, b)))
    roughness = np.sqrt(sq / 9.0)
    return slope, roughness, mx


def compute_feature_grids(dem: Dem):
    """Whole-raster (slope_deg, roughness, elev_diff) feature grids."""
    if backend.NUMBA_ENABLED:
        from . import _terrain_nb

        return _terrain_nb.feature_grids(dem.heights, dem.cell_size)
    return _feature_grids_numpy(dem.heights, dem.cell_size)


def cost_from_features(slope_deg, roughness, elev_diff, params: TerrainParams) -> np.ndarray:
    """Blend feature/limit ratios into costs; any raw ratio >= 1 saturates to 1.0."""
    rs = np.asarray(slope_deg, dtype=np.float64) / params.max_slope_deg
    rr = np.asarray(roughness, dtype=np.float64) / params.max_roughness
    rf = np.asarray(elev_diff, dtype=np.float64) / params.max_height_diff
    saturated = (rs >= 1.0) | (rr >= 1.0) | (rf >= 1.0)
    t = (
        params.slope_weight * np.clip(rs, 0.0, 1.0)
        + params.roughness_weight * np.clip(rr, 0.0, 1.0)
        + params.height_weight * np.clip(rf, 0.0, 1.0)
    )
    t = np.where(saturated, 1.0, t)
    return np.clip(t, 0.0, 1.0)


def compute_cost_map(dem: Dem, params: TerrainParams | None = None) -> CostMap:
    """Traversability cost map of a DEM under the given limits/weights."""
    params = params or TerrainParams()
    slope, roughness, elev = compute_feature_grids(dem)
    return CostMap(costs=cost_from_features(slope, roughness, elev, params))


def synth_terrain(seed: int, size: int, ruggedness: float, cell_size: float = 1.0) -> Dem:
    """Deterministic diamond-square fractal DEM.

    Generates a (2^k + 1) square surface covering `size` and crops. The same
    seed reproduces the raster bit for bit; ruggedness 0 yields a perfectly
    flat DEM. Amplitude decays by 0.6 per subdivision level, scaled so
    ruggedness around 1 gives terrain with a useful mix of traversable and
    saturated cells at default TerrainParams (roughly 15% untraversable at
    size 64; denser at larger sizes, so large-map callers usually lower it).
    """
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    if ruggedness < 0:
        raise ValueError(f"ruggedness must be non-negative, got {ruggedness}")
    n = 1
    while n + 1 < size:
        n *= 2
    rng = np.random.default_rng(seed)
    grid = np.zeros((n + 1, n + 1), dtype=np.float64)
    amp = ruggedness * cell_size * size / 16.0
    grid[::n, ::n] = rng.uniform(-1.0, 1.0, (2, 2)) * amp

    step = n
    decay = 0.6
    while step > 1:
        half = step // 2
        amp *= decay
        # diamond step: square centres
        tl = grid[0:-1:step, 0:-1:step]
        tr = grid[0:-1:step, step::step]
        bl = grid[step::step, 0:-1:step]
        br = grid[step::step, step::step]
        centres = (tl + tr + bl + br) / 4.0 + rng.uniform(-1.0, 1.0, tl.shape) * amp
        grid[half::step, half::step] = centres
        # square step: edge midpoints, averaging the in-bounds diamond neighbours
        for row_start, col_start in ((half, 0), (0, half)):
            rows = np.arange(row_start, n + 1, step)
            cols = np.arange(col_start, n + 1, step)
            rr, cc = np.meshgrid(rows, cols, indexing="ij")
            total = np.zeros(rr.shape)
            count = np.zeros(rr.shape)
            for dr, dc in ((-half, 0), (half, 0), (0, -half), (0, half)):
                r2 = rr + dr
                c2 = cc + dc
                ok = (r2 >= 0) & (r2 <= n) & (c2 >= 0) & (c2 <= n)
                total[ok] += grid[r2[ok], c2[ok]]
                count[ok] += 1
            grid[rr, cc] = total / count + rng.uniform(-1.0, 1.0, rr.shape) * amp
        step = half

    return Dem(heights=grid[:size, :size].copy(), cell_size=cell_size)
