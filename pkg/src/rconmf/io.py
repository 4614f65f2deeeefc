"""File formats: the binary matrix container, matrix CSV and JSON manifests.

Matrix container layout (little endian)::

    b"RCNMFMAT" | uint64 rows | uint64 cols | rows*cols float64, row-major
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import RconmfError

MAGIC = b"RCNMFMAT"
_HEADER = struct.Struct("<8sQQ")


class FormatError(RconmfError, ValueError):
    """A file does not follow the expected layout."""


def encode_matrix(M) -> bytes:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise FormatError("only 2-D arrays can be stored")
    rows, cols = M.shape
    return _HEADER.pack(MAGIC, rows, cols) + np.ascontiguousarray(M, dtype="<f8").tobytes(order="C")


def decode_matrix(buf: bytes) -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise FormatError("truncated matrix header")
    magic, rows, cols = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(buf) != expected:
        raise FormatError(f"expected {expected} bytes for a {rows}x{cols} matrix, got {len(buf)}")
    data = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size, count=rows * cols)
    return data.reshape(rows, cols).astype(np.float64)


def save_matrix(path, M) -> None:
    Path(path).write_bytes(encode_matrix(M))


def load_matrix(path) -> np.ndarray:
    return decode_matrix(Path(path).read_bytes())


def save_matrix_csv(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(c) for c in line.split(",")])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(f"{path}:{lineno}: ragged row")
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    return np.asarray(rows, dtype=np.float64)


def read_matrix(path) -> np.ndarray:
    """Load a matrix, picking the format from the extension (``.csv`` or the binary container)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_matrix_csv(path)
    return load_matrix(path)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
