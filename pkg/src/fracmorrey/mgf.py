"""MGF1 binary grid files and CSV exports.

Layout (all little-endian)::

    b"MGF1"                 magic
    uint32 n                dimension
    uint32 * n              axis sizes
    float64 h               spacing
    uint8 tag               0 = periodic, 1 = compact
    float64 * prod(sizes)   values, row-major
"""

from __future__ import annotations

import csv
import os
import struct
from pathlib import Path

import numpy as np

from .grid import GridError, GridFunction, GridSpec, _is_power_of_two

MAGIC = b"MGF1"
_TAGS = {"periodic": 0, "compact": 1}
_TAG_NAMES = {v: k for k, v in _TAGS.items()}


class GridFormatError(GridError):
    """Malformed MGF1 input. ``code`` is a stable machine-readable reason."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def encode(values: np.ndarray, h: float, tag: str = "periodic") -> bytes:
    values = np.ascontiguousarray(values, dtype="<f8")
    header = MAGIC + struct.pack("<I", values.ndim)
    header += struct.pack(f"<{values.ndim}I", *values.shape)
    header += struct.pack("<d", float(h)) + struct.pack("<B", _TAGS[tag])
    return header + values.tobytes(order="C")


def decode(data: bytes) -> tuple[np.ndarray, float, str]:
    """Parse MGF1 bytes into ``(values, h, tag)`` without grid validation."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise GridFormatError("bad_magic", "missing MGF1 magic")
    pos = 4
    if len(data) < pos + 4:
        raise GridFormatError("truncated", "file ends inside the dimension field")
    (n,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if n < 1 or n > 8:
        raise GridFormatError("bad_dimension", f"unsupported dimension {n}")
    if len(data) < pos + 4 * n + 9:
        raise GridFormatError("truncated", "file ends inside the header")
    sizes = struct.unpack_from(f"<{n}I", data, pos)
    pos += 4 * n
    (h,) = struct.unpack_from("<d", data, pos)
    pos += 8
    (tag,) = struct.unpack_from("<B", data, pos)
    pos += 1
    if tag not in _TAG_NAMES:
        raise GridFormatError("bad_tag", f"unknown support tag byte {tag}")
    count = int(np.prod(sizes, dtype=np.int64))
    if len(data) - pos < 8 * count:
        raise GridFormatError("truncated", f"expected {count} values, payload holds {(len(data) - pos) // 8}")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(sizes).astype(float)
    return values, h, _TAG_NAMES[tag]


def write_grid(f: GridFunction, path: str | os.PathLike) -> None:
    """Write ``f`` to ``path`` in MGF1 format."""
    Path(path).write_bytes(encode(f.values, f.spec.h, f.support_tag))


def read_grid(path: str | os.PathLike, padding_factor: int = 2) -> GridFunction:
    """Read an MGF1 file. The padding factor is not stored and defaults to 2."""
    values, h, tag = decode(Path(path).read_bytes())
    sizes = values.shape
    for s in sizes:
        if not _is_power_of_two(s) or s < 2:
            raise GridFormatError("non_power_of_two", f"axis size {s} is not a power of two")
    if len(set(sizes)) != 1:
        raise GridFormatError("unequal_axes", f"axis sizes {sizes} differ")
    if not (h > 0 and np.isfinite(h)):
        raise GridFormatError("bad_spacing", f"spacing {h} is not positive")
    spec = GridSpec(len(sizes), sizes[0], h * sizes[0], padding_factor)
    return GridFunction(spec, values, tag)


def write_matrix(entries: np.ndarray, h: float, path: str | os.PathLike) -> None:
    """Write a dense matrix as a 2-D MGF1 grid (no power-of-two check on write)."""
    Path(path).write_bytes(encode(np.asarray(entries), h, "periodic"))


def read_matrix(path: str | os.PathLike) -> tuple[np.ndarray, float]:
    values, h, _ = decode(Path(path).read_bytes())
    return values, h


def write_csv(f: GridFunction, path: str | os.PathLike) -> None:
    """One ``x1[,x2],value`` row per node in row-major order."""
    coords = [c.ravel() for c in f.spec.coordinates()]
    cols = coords + [f.values.ravel()]
    header = [f"x{i + 1}" for i in range(f.spec.n)] + ["value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(zip(*(map(repr, map(float, c)) for c in cols)))


def write_matrix_csv(entries: np.ndarray, path: str | os.PathLike) -> None:
    """Triplets ``i,j,value`` for every matrix entry."""
    entries = np.asarray(entries)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "value"])
        for i in range(entries.shape[0]):
            for j in range(entries.shape[1]):
                w.writerow([i, j, repr(float(entries[i, j]))])


def write_series_csv(rows, columns: list[str], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
