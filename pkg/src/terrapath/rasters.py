"""Raster and path file formats.

NNPR v1 is the portable binary raster container shared with external tools:
little-endian header ``magic "NNPR" | version u8=1 | dtype u8=0 (float32) |
channels u16 | height u32 | width u32`` followed by channels*height*width
float32 values, channel-major, row-major within a channel.

The ASCII grid format exists for human-editable fixtures: a first line
``width height cell_size`` then row-major values separated by whitespace.

Paths are plain text, one ``x y`` pair per line.
"""

import struct
from pathlib import Path

import numpy as np

from .grid import as_cells

NNPR_MAGIC = b"NNPR"
NNPR_VERSION = 1
_DTYPE_FLOAT32 = 0
_HEADER = struct.Struct("<4sBBHII")

_MAX_CHANNELS = 0xFFFF
_MAX_DIM = 0xFFFFFFFF


class RasterFormatError(ValueError):
    """Raised for malformed raster files or out-of-range dimensions."""


def write_nnpr(path, channels) -> None:
    """Write one or more equally shaped 2D rasters as an NNPR v1 file.

    `channels` is a single 2D array, a sequence of 2D arrays, or a (c, h, w)
    array. Values are stored as float32.
    """
    arr = np.asarray(channels, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[np.newaxis, :, :]
    if arr.ndim != 3:
        raise RasterFormatError(f"expected 2D or (c, h, w) raster data, got shape {arr.shape}")
    c, h, w = arr.shape
    if c == 0 or h == 0 or w == 0:
        raise RasterFormatError("empty raster")
    if c > _MAX_CHANNELS or h > _MAX_DIM or w > _MAX_DIM:
        raise RasterFormatError(f"raster dimensions {arr.shape} overflow the header fields")
    header = _HEADER.pack(NNPR_MAGIC, NNPR_VERSION, _DTYPE_FLOAT32, c, h, w)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_nnpr(path) -> np.ndarray:
    """Read an NNPR v1 file; returns a (channels, height, width) float32 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise RasterFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dtype, c, h, w = _HEADER.unpack_from(raw)
    if magic != NNPR_MAGIC:
        raise RasterFormatError(f"{path}: bad magic {magic!r}")
    if version != NNPR_VERSION:
        raise RasterFormatError(f"{path}: unsupported version {version}")
    if dtype != _DTYPE_FLOAT32:
        raise RasterFormatError(f"{path}: unsupported dtype code {dtype}")
    expected = _HEADER.size + 4 * c * h * w
    if len(raw) != expected:
        raise RasterFormatError(
            f"{path}: payload size mismatch (expected {expected} bytes, got {len(raw)})"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return data.reshape(c, h, w).copy()


def sniff_nnpr(path) -> bool:
    """True if the file starts with the NNPR magic."""
    with open(path, "rb") as fh:
        return fh.read(4) == NNPR_MAGIC


def write_ascii_grid(path, values, cell_size: float = 1.0) -> None:
    """Write a 2D raster in the ASCII fixture format."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise RasterFormatError(f"expected a 2D raster, got shape {arr.shape}")
    h, w = arr.shape
    lines = [f"{w} {h} {float(cell_size)!r}"]
    for row in arr:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_ascii_grid(path) -> tuple[np.ndarray, float]:
    """Read an ASCII grid; returns (values, cell_size)."""
    text = Path(path).read_text()
    tokens = text.split()
    if len(tokens) < 3:
        raise RasterFormatError(f"{path}: missing header line")
    try:
        w, h = int(tokens[0]), int(tokens[1])
        cell_size = float(tokens[2])
    except ValueError as exc:
        raise RasterFormatError(f"{path}: bad header: {exc}") from exc
    body = tokens[3:]
    if len(body) != w * h:
        raise RasterFormatError(f"{path}: expected {w * h} values, got {len(body)}")
    try:
        values = np.array([float(t) for t in body], dtype=np.float64).reshape(h, w)
    except ValueError as exc:
        raise RasterFormatError(f"{path}: bad value: {exc}") from exc
    return values, cell_size


def write_path_text(path, cells) -> None:
    """Serialize a cell path as one `x y` pair per line."""
    arr = as_cells(cells)
    lines = [f"{int(x)} {int(y)}" for x, y in arr]
    Path(path).write_text("\n".join(lines) + "\n")


def read_path_text(path) -> np.ndarray:
    """Read a path text file into an (n, 2) int32 array."""
    cells = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise RasterFormatError(f"{path}:{lineno}: expected 'x y', got {line!r}")
        try:
            cells.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise RasterFormatError(f"{path}:{lineno}: {exc}") from exc
    if not cells:
        raise RasterFormatError(f"{path}: empty path file")
    return as_cells(cells)
