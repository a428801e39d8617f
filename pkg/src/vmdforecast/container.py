"""Binary array container.

Layout: a 16-byte little-endian header ``b"LCW1", N: u32, channels: u32,
length: u32`` followed by float64 little-endian payload arrays written
back to back. The header only describes the leading block; readers that
know the record type consume any trailing blocks.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError

MAGIC = b"LCW1"
_HEADER = struct.Struct("<4sIII")


def write_container(path, header: tuple[int, int, int], *arrays: np.ndarray) -> None:
    n, channels, length = (int(v) for v in header)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, channels, length))
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_container(path) -> tuple[tuple[int, int, int], np.ndarray]:
    """Return ``((N, channels, length), payload)`` with payload as a flat float64 array."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated container header")
    magic, n, channels, length = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    body = raw[_HEADER.size:]
    if len(body) % 8:
        raise DataError(f"{path}: payload is not a whole number of float64 values")
    return (n, channels, length), np.frombuffer(body, dtype="<f8").astype(np.float64)
