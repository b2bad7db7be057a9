"""Tensor serialization.

Binary layout (little endian)::

    b"GTN0" | u8 rank | rank x u64 dims | prod(dims) x f64 payload

CSV layout: a header line ``# shape=3x4`` followed by the values in row-major
order, one row per slice along the last axis, written with ``repr`` so every
float round-trips exactly.
"""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from gtn.errors import TensorFormatError
from gtn.tensor.core import Tensor

MAGIC = b"GTN0"
_HEADER = struct.Struct("<4sB")


def tensor_to_bytes(tensor: Tensor) -> bytes:
    rank = tensor.ndim
    if rank > 255:
        raise TensorFormatError(f"rank {rank} does not fit the u8 rank field")
    dims = struct.pack(f"<{rank}Q", *tensor.shape)
    payload = tensor.array.astype("<f8", copy=False).tobytes()
    return _HEADER.pack(MAGIC, rank) + dims + payload


def tensor_from_bytes(buf: bytes) -> Tensor:
    if len(buf) < _HEADER.size:
        raise TensorFormatError(f"buffer of {len(buf)} bytes is too short for a tensor header")
    magic, rank = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise TensorFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    dims_end = _HEADER.size + 8 * rank
    if len(buf) < dims_end:
        raise TensorFormatError("buffer truncated inside the dimension list")
    shape = struct.unpack_from(f"<{rank}Q", buf, _HEADER.size)
    if rank == 0 or 0 in shape:
        raise TensorFormatError(f"header declares an empty shape {shape}")
    expected = dims_end + 8 * math.prod(shape)
    if len(buf) != expected:
        raise TensorFormatError(
            f"payload size mismatch for shape {shape}: expected {expected} bytes, got {len(buf)}"
        )
    values = np.frombuffer(buf, dtype="<f8", offset=dims_end).astype(np.float64)
    return Tensor.wrap(values.reshape(shape), "tensor_from_bytes")


def save_tensor(tensor: Tensor, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(tensor_to_bytes(tensor))
    return path


def load_tensor(path: str | Path) -> Tensor:
    return tensor_from_bytes(Path(path).read_bytes())


def write_tensor_csv(tensor: Tensor, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = tensor.array.reshape(-1, tensor.shape[-1])
    with path.open("w", newline="", encoding="utf-8") as fp:
        fp.write("# shape=" + "x".join(str(d) for d in tensor.shape) + "\n")
        writer = csv.writer(fp)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return path


def read_tensor_csv(path: str | Path) -> Tensor:
    with Path(path).open("r", newline="", encoding="utf-8") as fp:
        header = fp.readline().strip()
        if not header.startswith("# shape="):
            raise TensorFormatError(f"{path}: missing '# shape=' header line")
        try:
            shape = tuple(int(d) for d in header[len("# shape="):].split("x"))
        except ValueError as exc:
            raise TensorFormatError(f"{path}: malformed shape header {header!r}") from exc
        values = [float(v) for row in csv.reader(fp) for v in row]
    if len(values) != math.prod(shape):
        raise TensorFormatError(f"{path}: {len(values)} values do not fill shape {shape}")
    return Tensor(values, shape)
