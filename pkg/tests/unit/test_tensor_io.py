from __future__ import annotations

import struct
from pathlib import Path

import pytest

from gtn.errors import TensorFormatError
from gtn.tensor import Rng, Tensor, equal
from gtn.tensor.io import (
    MAGIC,
    load_tensor,
    read_tensor_csv,
    save_tensor,
    tensor_from_bytes,
    tensor_to_bytes,
    write_tensor_csv,
)


def test_binary_layout():
    buf = tensor_to_bytes(Tensor([[1.0, 2.0, 3.0]]))
    assert buf[:4] == MAGIC
    assert buf[4] == 2
    assert struct.unpack_from("<2Q", buf, 5) == (1, 3)
    assert struct.unpack_from("<3d", buf, 21) == (1.0, 2.0, 3.0)
    assert len(buf) == 5 + 16 + 24


def test_binary_file_round_trip_is_bit_exact(tmp_path: Path):
    tensor = Tensor.wrap(Rng(3).normal((2, 3, 4)))
    path = save_tensor(tensor, tmp_path / "nested" / "w.gtn")
    assert equal(load_tensor(path), tensor)


def test_malformed_buffers_are_rejected():
    good = tensor_to_bytes(Tensor([1.0, 2.0]))
    with pytest.raises(TensorFormatError):
        tensor_from_bytes(b"XXXX" + good[4:])
    with pytest.raises(TensorFormatError):
        tensor_from_bytes(good[:-1])
    with pytest.raises(TensorFormatError):
        tensor_from_bytes(good + b"\x00")
    with pytest.raises(TensorFormatError):
        tensor_from_bytes(b"GT")


def test_csv_keeps_shape_header_and_exact_values(tmp_path: Path):
    tensor = Tensor.wrap(Rng(12).normal((3, 4)))
    path = write_tensor_csv(tensor, tmp_path / "t.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "# shape=3x4"
    assert equal(read_tensor_csv(path), tensor)


def test_csv_without_header_is_rejected(tmp_path: Path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0,2.0\n", encoding="utf-8")
    with pytest.raises(TensorFormatError):
        read_tensor_csv(path)
