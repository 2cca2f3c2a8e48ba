"""Binary field dumps and CSV tables."""
from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ..errors import DataError

FIELD_MAGIC = b"TSFD"


def write_field(path, u: np.ndarray, spacing) -> Path:
    """Write a complex field: magic, u32 dim, u32 sizes, f64 spacing, then re/im float64 pairs.

    All numbers are little-endian and the payload is in C order.
    """
    path = Path(path)
    u = np.asarray(u, dtype=np.complex128)
    spacing = tuple(float(h) for h in spacing)
    if len(spacing) != u.ndim:
        raise DataError(f"{len(spacing)} spacings for a {u.ndim}-dimensional field")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack(f"<I{u.ndim}I", u.ndim, *u.shape))
        fh.write(struct.pack(f"<{u.ndim}d", *spacing))
        fh.write(np.ascontiguousarray(u).astype("<c16").tobytes())
    return path


def read_field(path) -> tuple[np.ndarray, tuple[float, ...]]:
    """Inverse of ``write_field``; returns ``(field, spacing)``."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read field dump {path}: {exc.strerror}") from None
    if data[:4] != FIELD_MAGIC:
        raise DataError(f"{path} is not a field dump (bad magic)")
    (dim,) = struct.unpack_from("<I", data, 4)
    if dim not in (1, 2, 3):
        raise DataError(f"{path}: unsupported dimension {dim}")
    shape = struct.unpack_from(f"<{dim}I", data, 8)
    off = 8 + 4 * dim
    spacing = struct.unpack_from(f"<{dim}d", data, off)
    off += 8 * dim
    count = int(np.prod(shape))
    if len(data) - off != 16 * count:
        raise DataError(f"{path}: payload holds {len(data) - off} bytes, expected {16 * count}")
    u = np.frombuffer(data, dtype="<c16", count=count, offset=off).astype(np.complex128)
    return u.reshape(shape), tuple(spacing)


def write_csv(path, rows: Iterable[Mapping], columns: list[str] | None = None) -> Path:
    """Write dict rows; columns default to the keys of the first row."""
    rows = list(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return "x".join(str(x) for x in v)
    return v


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
