"""Numba flood-fill kernels for region connectivity checks."""

import numpy as np
from numba import njit

from .grid import NEIGHBOR_DX, NEIGHBOR_DY

_DX = NEIGHBOR_DX.copy()
_DY = NEIGHBOR_DY.copy()


@njit(cache=True)
def connected_mask(bits, width, height, start, goal):
    """True when an 8-connected chain of set bits joins start and goal (flat indices)."""
    if not bits[start] or not bits[goal]:
        return False
    if start == goal:
        return True
    n = width * height
    visited = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[top] = start
    top += 1
    visited[start] = True
    while top > 0:
        top -= 1
        u = stack[top]
        ux = u % width
        uy = u // width
        for k in range(8):
            vx = ux + _DX[k]
            vy = uy + _DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if visited[v] or not bits[v]:
                continue
            if v == goal:
                return True
            visited[v] = True
            stack[top] = v
            top += 1
    return False


@njit(cache=True)
def connected_thresh(probs, td, width, height, start, goal):
    """Connectivity of {p >= td} with start/goal force-included, without
    materializing the mask."""
    if start == goal:
        return True
    n = width * height
    visited = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[top] = start
    top += 1
    visited[start] = True
    while top > 0:
        top -= 1
        u = stack[top]
        ux = u % width
        uy = u // width
        for k in range(8):
            vx = ux + _DX[k]
            vy = uy + _DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if visited[v]:
                continue
            if probs[v] < td and v != goal:
                continue
            if v == goal:
                return True
            visited[v] = True
            stack[top] = v
            top += 1
    return False
