"""Numba kernel for whole-raster terrain feature extraction.

Accumulation order matches the numpy fallback in terrain.py point for point
so both backends agree to float rounding.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def feature_grids(heights, cell_size):
    h, w = heights.shape
    slope = np.empty((h, w), dtype=np.float64)
    roughness = np.empty((h, w), dtype=np.float64)
    elev = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            sum_z = 0.0
            sum_dxz = 0.0
            sum_dyz = 0.0
            for dy in range(-1, 2):
                yy = min(max(y + dy, 0), h - 1)
                for dx in range(-1, 2):
                    xx = min(max(x + dx, 0), w - 1)
                    z = heights[yy, xx]
                    sum_z += z
                    if dx:
                        sum_dxz += dx * z
                    if dy:
                        sum_dyz += dy * z
            a = sum_dxz / (6.0 * cell_size)
            b = sum_dyz / (6.0 * cell_size)
            c = sum_z / 9.0
            sq = 0.0
            mx = 0.0
            for dy in range(-1, 2):
                yy = min(max(y + dy, 0), h - 1)
                for dx in range(-1, 2):
                    xx = min(max(x + dx, 0), w - 1)
                    res = heights[yy, xx] - (a * (dx * cell_size) + b * (dy * cell_size) + c)
                    sq += res * res
                    ares = abs(res)
                    if ares > mx:
                        mx = ares
            slope[y, x] = math.degrees(math.atan(math.hypot(a, b)))
            roughness[y, x] = math.sqrt(sq / 9.0)
            elev[y, x] = mx
    return slope, roughness, elev
