"""Gaussian positional encoding of start/goal cells.

Each endpoint becomes a full-raster channel holding an isotropic Gaussian
centred on it: raw mode uses the 2D density 1/(2*pi*sigma^2) *
exp(-(dx^2 + dy^2)/(2*sigma^2)); normalized mode (the default) rescales so
the peak at the centre is exactly 1, since the raw peak is numerically
negligible as a network input at useful sigmas. Values decay strictly with
Euclidean distance from the centre, so the argmax is the centre cell.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EncodingConfig:
    """Gaussian width in cells and peak normalization toggle."""

    sigma: float
    normalize_peak: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def default_sigma(size: int) -> float:
    """Default encoding width: a quarter of the map size."""
    return size / 4.0


def gaussian_encode(size: int, center, config: EncodingConfig) -> np.ndarray:
    """Encode a cell as a (size, size) Gaussian raster."""
    cx, cy = int(center[0]), int(center[1])
    if not (0 <= cx < size and 0 <= cy < size):
        raise ValueError(f"center {center} out of bounds for size {size}")
    xs = np.arange(size, dtype=np.float64) - cx
    ys = np.arange(size, dtype=np.float64) - cy
    d2 = ys[:, None] ** 2 + xs[None, :] ** 2
    enc = np.exp(-d2 / (2.0 * config.sigma**2))
    if not config.normalize_peak:
        enc = enc / (2.0 * math.pi * config.sigma**2)
    return enc
