"""Shared grid conventions.

Cells are (x, y) pairs with x = column and y = row; rasters are row-major
numpy arrays indexed arr[y, x]. The linear index of a cell is y * width + x.
Connectivity is always 8-neighbour; diagonal steps measure sqrt(2) and
cardinal steps 1, independent of the physical cell size.
"""

import math

import numpy as np

Cell = tuple[int, int]

# Neighbour order is fixed ((dy, dx) ascending) so tie-breaking is
# reproducible across backends.
NEIGHBOR_DX = np.array([-1, 0, 1, -1, 1, -1, 0, 1], dtype=np.int64)
NEIGHBOR_DY = np.array([-1, -1, -1, 0, 0, 1, 1, 1], dtype=np.int64)
STEP_LEN = np.array(
    [math.sqrt(2.0), 1.0, math.sqrt(2.0), 1.0, 1.0, math.sqrt(2.0), 1.0, math.sqrt(2.0)],
    dtype=np.float64,
)


def in_bounds(cell: Cell, width: int, height: int) -> bool:
    x, y = cell
    return 0 <= x < width and 0 <= y < height


def cell_index(cell: Cell, width: int) -> int:
    x, y = cell
    return y * width + x


def euclid(a: Cell, b: Cell) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def octile(a: Cell, b: Cell) -> float:
    """Length of the shortest 8-connected path on an empty grid."""
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    lo, hi = (dx, dy) if dx < dy else (dy, dx)
    return hi + (math.sqrt(2.0) - 1.0) * lo


def as_cells(path) -> np.ndarray:
    """Coerce a cell sequence to an (n, 2) int32 array of (x, y) rows."""
    arr = np.asarray(path, dtype=np.int32)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) cell array, got shape {arr.shape}")
    return arr
