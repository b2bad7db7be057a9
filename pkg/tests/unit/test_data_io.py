from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from gtn.data import export_csv, import_csv, load_dataset, read_csv_dataset, save_dataset
from gtn.errors import ChecksumError, DatasetError
from gtn.tensor import Rng


def test_saved_dataset_loads_identically(tmp_path: Path, tiny_task):
    save_dataset(tiny_task.target, tmp_path / "target")
    loaded = load_dataset(tmp_path / "target")
    for original, restored in zip(tiny_task.target, loaded, strict=True):
        assert np.array_equal(original.inputs.array, restored.inputs.array)
        assert np.array_equal(original.labels, restored.labels)
        assert restored.split == original.split
    assert loaded.num_classes == 3
    assert loaded.provenance["task"] == "target"


def test_corrupted_payload_fails_the_checksum(tmp_path: Path, tiny_task):
    save_dataset(tiny_task.source, tmp_path)
    payload = tmp_path / "val.bin"
    data = bytearray(payload.read_bytes())
    data[-3] ^= 0xFF
    payload.write_bytes(bytes(data))
    with pytest.raises(ChecksumError):
        load_dataset(tmp_path)


def test_missing_or_malformed_manifest(tmp_path: Path, tiny_task):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)
    save_dataset(tiny_task.source, tmp_path)
    (tmp_path / "manifest.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)
    (tmp_path / "manifest.json").write_text('{"format": "gtn-dataset"}', encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)


def test_csv_export_and_import(tmp_path: Path, tiny_task):
    train = tiny_task.source.train
    path = export_csv(train, tmp_path / "train.csv")
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",")[0] == "x0"
    assert header.split(",")[-1] == "label"
    back = read_csv_dataset(path, num_classes=4)
    assert np.array_equal(back.inputs.array, train.inputs.array)
    assert np.array_equal(back.labels, train.labels)
    splits = import_csv(path, Rng(0), num_classes=4)
    assert sum(len(ds) for ds in splits) == len(train)
    assert splits.provenance["generator"] == "csv"


def test_csv_errors(tmp_path: Path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_csv_dataset(empty)
    no_label = tmp_path / "no_label.csv"
    no_label.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_csv_dataset(no_label)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,label\n1,0\n2\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_csv_dataset(ragged)
    bad_value = tmp_path / "bad.csv"
    bad_value.write_text("a,label\nx,0\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_csv_dataset(bad_value)
