"""Reading and writing square matrix files.

Two encodings are supported:

* CSV: first line ``n``, then ``n`` lines of ``n`` comma-separated values,
  written with 17 significant digits so doubles round-trip exactly.
* Binary: magic ``b"SIMM"``, version byte ``1``, ``n`` as unsigned 64-bit
  little-endian, then ``n*n`` little-endian float64 values, row-major.

The encoding is chosen from the file extension (``.csv`` vs anything else)
unless given explicitly.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .core import MatrixFormatError, ParameterError

__all__ = ["MAGIC", "VERSION", "write_matrix", "read_matrix", "format_float", "guess_format"]

MAGIC = b"SIMM"
VERSION = 1
_HEADER = struct.Struct("<4sBQ")


def format_float(x: float) -> str:
    """Locale-independent, round-trippable rendering of a double."""
    return format(float(x), ".17g")


def guess_format(path) -> str:
    return "csv" if str(path).lower().endswith(".csv") else "binary"


def write_matrix(path, K, fmt: str | None = None):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {K.shape}")
    fmt = fmt or guess_format(path)
    n = K.shape[0]
    if fmt == "csv":
        lines = [str(n)]
        lines.extend(",".join(format_float(v) for v in row) for row in K)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, n))
            fh.write(np.ascontiguousarray(K, dtype="<f8").tobytes())
    else:
        raise ParameterError(f"unknown matrix format {fmt!r}")


def read_matrix(path, fmt: str | None = None) -> np.ndarray:
    """Load a square matrix; raises :class:`MatrixFormatError` on bad input."""
    if not os.path.exists(path):
        raise MatrixFormatError(f"{path}: no such file")
    fmt = fmt or _sniff(path)
    try:
        K = _read_csv(path) if fmt == "csv" else _read_binary(path)
    except (ValueError, struct.error, UnicodeDecodeError) as exc:
        raise MatrixFormatError(f"{path}: {exc}") from exc
    if not np.isfinite(K).all():
        raise MatrixFormatError(f"{path}: matrix has non-finite entries")
    return K


def _sniff(path) -> str:
    with open(path, "rb") as fh:
        head = fh.read(4)
    return "binary" if head == MAGIC else "csv"


def _read_csv(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError("empty file")
    n = int(lines[0])
    if n < 1:
        raise ValueError(f"invalid size {n}")
    if len(lines) - 1 != n:
        raise ValueError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:]):
        vals = [float(v) for v in ln.split(",")]
        if len(vals) != n:
            raise ValueError(f"row {k} has {len(vals)} values, expected {n} (matrix must be square)")
        rows.append(vals)
    return np.array(rows, dtype=np.float64)


def _read_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ValueError("truncated header")
    magic, version, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError("bad magic bytes")
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    if n < 1:
        raise ValueError(f"invalid size {n}")
    body = data[_HEADER.size:]
    if len(body) != 8 * n * n:
        raise ValueError(f"expected {8 * n * n} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(n, n).astype(np.float64)
