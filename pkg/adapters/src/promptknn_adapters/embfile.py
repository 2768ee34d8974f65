"""Writer for the promptknn embedding file format.

Write-only on purpose: adapters emit the format, the core package owns all
validation. Layout: 36-byte little-endian header (magic "PKNNEMB1", uint32
dim, uint64 rows, uint8 dtype code 1 = float32, 15 zero bytes), then the
float32 payload row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<8sIQB15s")


def write_embedding_file(array: np.ndarray, destination: str | Path) -> int:
    """Write a (rows, dim) float array; returns bytes written."""
    data = np.ascontiguousarray(array, dtype="<f4")
    if data.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {data.shape}")
    rows, dim = data.shape
    header = _HEADER.pack(b"PKNNEMB1", dim, rows, 1, b"\x00" * 15)
    with open(destination, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())
    return _HEADER.size + data.nbytes
