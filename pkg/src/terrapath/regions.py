"""Heuristic search regions from probability maps.

A probability map scores each cell with the likelihood that the optimal
path crosses it. Thresholding at td keeps cells with p >= td; the adaptive
sweep walks td down a fixed grid from high to low and keeps the largest td
whose mask (with start and goal force-included) 8-connects the endpoints.
If no td in range connects, the all-true mask is returned with a fallback
signal so planning degrades to a full-map search instead of failing.

Masks nest monotonically (higher td => subset), connectivity uses the same
8-adjacency as the planner, and every returned mask contains start and goal.
All functions are pure over immutable rasters.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import backend
from .grid import as_cells, in_bounds
from .terrain import _freeze


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-cell optimal-path likelihood in [0, 1]."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError(f"probs must be 2D, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite")
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", _freeze(p))

    @property
    def width(self) -> int:
        return self.probs.shape[1]

    @property
    def height(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class RegionMask:
    """Binary region raster; True marks cells inside the search region."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2:
            raise ValueError(f"bits must be 2D, got shape {b.shape}")
        object.__setattr__(self, "bits", _freeze(b))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def area(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class ThresholdPolicy:
    """Descending td sweep grid: td_start, td_start - td_step, ..., >= td_min."""

    td_start: float = 0.95
    td_step: float = 0.05
    td_min: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.td_min <= self.td_start <= 1.0):
            raise ValueError(
                f"need 0 < td_min <= td_start <= 1, got td_min={self.td_min}, "
                f"td_start={self.td_start}"
            )
        if not self.td_step > 0:
            raise ValueError(f"td_step must be positive, got {self.td_step}")

    def grid(self) -> np.ndarray:
        """Descending td values, rounded to 9 decimals so decimal steps land
        on exact grid points despite binary float arithmetic."""
        count = int(math.floor((self.td_start - self.td_min) / self.td_step + 1e-9)) + 1
        tds = np.round(self.td_start - self.td_step * np.arange(count), 9)
        return tds[tds >= self.td_min - 1e-9]


@dataclass(frozen=True)
class ThresholdResult:
    """Outcome of the adaptive sweep; td is 0.0 when fallback fired."""

    td: float
    mask: RegionMask
    fallback: bool


@dataclass(frozen=True)
class RegionReport:
    """CSV-facing region summary: chosen td, area in cells, and mm."""

    chosen_td: float
    area: int
    mm: float

    def csv_row(self) -> str:
        return f"{self.chosen_td},{self.area},{self.mm}"


def threshold_region(prob: ProbabilityMap, td: float) -> RegionMask:
    """Mask of cells with p >= td."""
    if not (0.0 <= td <= 1.0):
        raise ValueError(f"td must lie in [0, 1], got {td}")
    return RegionMask(bits=prob.probs >= td)


def region_connected(mask: RegionMask, start, goal) -> bool:
    """True when start and goal are joined by an 8-connected chain of set bits."""
    w, h = mask.width, mask.height
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    if not in_bounds(start, w, h) or not in_bounds(goal, w, h):
        raise ValueError(f"start {start} or goal {goal} out of bounds for {w}x{h} mask")
    if backend.NUMBA_ENABLED:
        from . import _regions_nb

        return bool(
            _regions_nb.connected_mask(
                np.ascontiguousarray(mask.bits.ravel()), w, h,
                start[1] * w + start[0], goal[1] * w + goal[0],
            )
        )
    if not mask.bits[start[1], start[0]] or not mask.bits[goal[1], goal[0]]:
        return False
    labels, _ = ndimage.label(mask.bits, structure=np.ones((3, 3), dtype=int))
    return labels[start[1], start[0]] == labels[goal[1], goal[0]]


def dilate_mask(mask: RegionMask, steps: int = 1) -> RegionMask:
    """Grow the mask by `steps` cells of 8-neighbour dilation."""
    if steps < 1:
        return mask
    grown = ndimage.maximum_filter(mask.bits, size=2 * steps + 1, mode="constant", cval=False)
    return RegionMask(bits=grown)


def adaptive_threshold(
    prob: ProbabilityMap,
    start,
    goal,
    policy: ThresholdPolicy | None = None,
    dilate_steps: int = 0,
) -> ThresholdResult:
    """Largest grid td whose mask (start/goal force-included) connects the endpoints.

    `dilate_steps` grows each candidate mask before the connectivity check;
    use 1 for masks derived from upscaled probability maps, where bilinear
    interpolation can pinch corridors shut. Falls back to the all-true mask
    (td 0.0, fallback=True) when no td in the grid connects.
    """
    policy = policy or ThresholdPolicy()
    w, h = prob.width, prob.height
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    if not in_bounds(start, w, h) or not in_bounds(goal, w, h):
        raise ValueError(f"start {start} or goal {goal} out of bounds for {w}x{h} map")

    flat = np.ascontiguousarray(prob.probs.ravel())
    s = start[1] * w + start[0]
    t = goal[1] * w + goal[0]
    use_fast = backend.NUMBA_ENABLED and dilate_steps == 0
    if use_fast:
        from . import _regions_nb

        for td in policy.grid():
            if _regions_nb.connected_thresh(flat, td, w, h, s, t):
                bits = prob.probs >= td
                bits[start[1], start[0]] = True
                bits[goal[1], goal[0]] = True
                return ThresholdResult(td=float(td), mask=RegionMask(bits=bits), fallback=False)
    else:
        for td in policy.grid():
            bits = prob.probs >= td
            if dilate_steps:
                bits = ndimage.maximum_filter(
                    bits, size=2 * dilate_steps + 1, mode="constant", cval=False
                )
            bits[start[1], start[0]] = True
            bits[goal[1], goal[0]] = True
            mask = RegionMask(bits=bits)
            if region_connected(mask, start, goal):
                return ThresholdResult(td=float(td), mask=mask, fallback=False)

    full = RegionMask(bits=np.ones((h, w), dtype=bool))
    return ThresholdResult(td=0.0, mask=full, fallback=True)


def model_metric(label_path, mask: RegionMask) -> float:
    """Label-path cell count divided by mask area; higher means a tighter region."""
    area = mask.area
    if area == 0:
        raise ValueError("mask area must be positive")
    cells = as_cells(label_path)
    return float(len(cells)) / float(area)


def region_report(label_path, result: ThresholdResult) -> RegionReport:
    """Bundle a threshold outcome with its mm score for CSV reporting."""
    return RegionReport(
        chosen_td=result.td,
        area=result.mask.area,
        mm=model_metric(label_path, result.mask),
    )


def oracle_region(label_path, size: int, radius: int, blur_sigma: float = 0.0) -> ProbabilityMap:
    """Model-free probability map built from a known path.

    Probability 1 within Chebyshev distance `radius` of any path cell, then
    optionally Gaussian-blurred and renormalized to peak 1. Deterministic;
    stands in for a learned predictor when testing masked planning.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    cells = as_cells(label_path)
    if len(cells) == 0:
        raise ValueError("label path is empty")
    if cells[:, 0].min() < 0 or cells[:, 1].min() < 0 or cells.max() >= size:
        raise ValueError("label path leaves the raster bounds")
    base = np.zeros((size, size), dtype=np.float64)
    base[cells[:, 1], cells[:, 0]] = 1.0
    corridor = ndimage.maximum_filter(base, size=2 * radius + 1, mode="constant", cval=0.0)
    if blur_sigma > 0:
        blurred = ndimage.gaussian_filter(corridor, sigma=blur_sigma, mode="constant", cval=0.0)
        peak = blurred.max()
        if peak > 0:
            blurred = blurred / peak
        return ProbabilityMap(probs=np.clip(blurred, 0.0, 1.0))
    return ProbabilityMap(probs=corridor)


def rescale_region(prob: ProbabilityMap, target_size: int) -> ProbabilityMap:
    """Resize a square probability map by an integer factor.

    Downscaling is factor x factor average pooling; upscaling is bilinear
    interpolation over pixel centres. Masks thresholded from an upscaled map
    should be dilated one step (adaptive_threshold(dilate_steps=1)) to guard
    corridors pinched by interpolation.
    """
    if prob.width != prob.height:
        raise ValueError(f"rescale_region needs a square map, got {prob.height}x{prob.width}")
    src = prob.width
    if target_size == src:
        return prob
    if target_size < src:
        if src % target_size != 0:
            raise ValueError(f"downscale {src} -> {target_size} is not an integer factor")
        f = src // target_size
        pooled = prob.probs.reshape(target_size, f, target_size, f).mean(axis=(1, 3))
        return ProbabilityMap(probs=pooled)
    if target_size % src != 0:
        raise ValueError(f"upscale {src} -> {target_size} is not an integer factor")
    f = target_size // src
    coords = (np.arange(target_size, dtype=np.float64) + 0.5) / f - 0.5
    coords = np.clip(coords, 0.0, src - 1.0)
    lo = np.floor(coords).astype(np.int64)
    hi = np.minimum(lo + 1, src - 1)
    frac = coords - lo
    p = prob.probs
    rows = p[lo][:, lo] * np.outer(1 - frac, 1 - frac)
    rows += p[lo][:, hi] * np.outer(1 - frac, frac)
    rows += p[hi][:, lo] * np.outer(frac, 1 - frac)
    rows += p[hi][:, hi] * np.outer(frac, frac)
    return ProbabilityMap(probs=np.clip(rows, 0.0, 1.0))
