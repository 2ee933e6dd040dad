"""Matrix export for external embedding tools

CSV: header `,0,1,...,n-1`, then one row per index starting with the index.
Binary: 16-byte little-endian header (magic `MRLD`, uint32 version, uint64 n)
followed by n*n float64 values in row-major order.
"""
import io
import logging
import struct
from pathlib import Path

import numpy as np
import pandas as pd

from datamodel import DataError

logger = logging.getLogger(__name__)

BIN_MAGIC = b"MRLD"
BIN_VERSION = 1
BIN_HEADER = struct.Struct("<4sIQ")


def _square(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DataError(f"matrix must be square, got {values.shape}")
    return values


def matrix_to_csv(values) -> bytes:
    values = _square(values)
    frame = pd.DataFrame(values, index=range(len(values)), columns=range(len(values)))
    return frame.to_csv(float_format=None, lineterminator="\n").encode("utf-8")


def matrix_from_csv(data: bytes) -> np.ndarray:
    try:
        frame = pd.read_csv(io.BytesIO(data), index_col=0, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError) as e:
        raise DataError(f"malformed matrix CSV: {e}")
    values = frame.to_numpy(dtype=np.float64)
    return _square(values)


def matrix_to_bin(values) -> bytes:
    values = _square(values)
    header = BIN_HEADER.pack(BIN_MAGIC, BIN_VERSION, len(values))
    return header + np.ascontiguousarray(values, dtype="<f8").tobytes()


def matrix_from_bin(data: bytes) -> np.ndarray:
    if len(data) < BIN_HEADER.size:
        raise DataError("matrix file too short for its header")
    magic, version, n = BIN_HEADER.unpack_from(data)
    if magic != BIN_MAGIC:
        raise DataError("not a matrix file (bad magic)")
    if version != BIN_VERSION:
        raise DataError(f"unsupported matrix file version {version}")
    payload = data[BIN_HEADER.size:]
    if len(payload) != n * n * 8:
        raise DataError(f"matrix payload has {len(payload)} bytes, expected {n * n * 8}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(n, n)


def write_matrix(values, path, fmt: str = "csv") -> Path:
    """Write a matrix as `csv` or `bin`; returns the path written"""
    path = Path(path)
    if fmt == "csv":
        path.write_bytes(matrix_to_csv(values))
    elif fmt == "bin":
        path.write_bytes(matrix_to_bin(values))
    else:
        raise DataError(f"unknown matrix format '{fmt}' (use csv or bin)")
    logger.info("Wrote %s matrix to %s", fmt, path)
    return path


def read_matrix(path) -> np.ndarray:
    """Read a matrix written by write_matrix; the format is detected from the content"""
    path = Path(path)
    if not path.exists():
        raise DataError(f"matrix file not found: {path}")
    data = path.read_bytes()
    if data[:4] == BIN_MAGIC:
        return matrix_from_bin(data)
    return matrix_from_csv(data)
