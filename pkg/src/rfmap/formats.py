"""Binary file formats for maps and sample sets.

Both formats are little-endian with a 4-byte magic whose last byte is the
version.  Map values are float64; the value order in a map file is
i-fastest, then j, then k (Fortran order of the (n1, n2, n3) array), so a
frontal slice is a contiguous block.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .completion import TubeSampleSet

__all__ = ["read_t3b", "write_t3b", "read_smp", "write_smp"]

T3B_MAGIC = b"T3B\x01"
SMP_MAGIC = b"SMP\x01"


def write_t3b(path: str | Path, t: np.ndarray) -> None:
    """Write an (n1, n2, n3) float tensor to a .t3b file."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order array, got shape {t.shape}")
    n1, n2, n3 = t.shape
    with open(path, "wb") as fh:
        fh.write(T3B_MAGIC)
        fh.write(struct.pack("<III", n1, n2, n3))
        fh.write(np.ascontiguousarray(t.ravel(order="F"), dtype="<f8").tobytes())


def read_t3b(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise ValueError(f"{path}: truncated file ({len(data)} bytes)")
    if data[:4] != T3B_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {T3B_MAGIC!r}")
    n1, n2, n3 = struct.unpack("<III", data[4:16])
    count = n1 * n2 * n3
    expected = 16 + 8 * count
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=16)
    return values.reshape((n1, n2, n3), order="F").astype(float)


def write_smp(path: str | Path, samples: TubeSampleSet) -> None:
    """Write a tube sample set to a .smp file in canonical (row, col) order."""
    s = samples.sorted_by_position()
    with open(path, "wb") as fh:
        fh.write(SMP_MAGIC)
        fh.write(struct.pack("<IIII", s.n1, s.n2, s.n3, s.count))
        rec = np.zeros(
            s.count, dtype=[("i", "<u4"), ("j", "<u4"), ("tube", "<f8", (s.n3,))]
        )
        rec["i"] = s.rows
        rec["j"] = s.cols
        rec["tube"] = s.tubes
        fh.write(rec.tobytes())


def read_smp(path: str | Path) -> TubeSampleSet:
    data = Path(path).read_bytes()
    if len(data) < 20:
        raise ValueError(f"{path}: truncated file ({len(data)} bytes)")
    if data[:4] != SMP_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {SMP_MAGIC!r}")
    n1, n2, n3, count = struct.unpack("<IIII", data[4:20])
    rec_dtype = np.dtype([("i", "<u4"), ("j", "<u4"), ("tube", "<f8", (n3,))])
    expected = 20 + rec_dtype.itemsize * count
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    rec = np.frombuffer(data, dtype=rec_dtype, count=count, offset=20)
    return TubeSampleSet(
        n1=n1, n2=n2, n3=n3,
        rows=rec["i"].astype(np.int64),
        cols=rec["j"].astype(np.int64),
        tubes=rec["tube"].reshape(count, n3).astype(float),
    )
