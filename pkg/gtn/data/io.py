"""Dataset directories and CSV import/export.

Directory layout::

    manifest.json
    train.bin  val.bin  test.bin            GTN0 tensors with the inputs
    train.labels  val.labels  test.labels   u32 little-endian label arrays

The manifest records shapes, class count, per-split counts, split indices
and the sha256 of every payload file.
"""
from __future__ import annotations

import csv
import hashlib
import logging
from pathlib import Path
from typing import Any

import numpy as np
import orjson
from jsonschema import ValidationError, validate

from gtn.data.dataset import Dataset, DatasetSplits, Split, split_dataset
from gtn.errors import ChecksumError, DatasetError, TensorFormatError
from gtn.layers.checkpoint import dump_json
from gtn.tensor import Rng, Tensor
from gtn.tensor.io import tensor_from_bytes, tensor_to_bytes

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
FORMAT_NAME = "gtn-dataset"
FORMAT_VERSION = 1
LABEL_COLUMN = "label"

_FILE_ENTRY = {
    "type": "object",
    "properties": {
        "file": {"type": "string"},
        "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "bytes": {"type": "integer", "minimum": 0},
    },
    "required": ["file", "sha256", "bytes"],
}

DATASET_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "format": {"const": FORMAT_NAME},
        "version": {"const": FORMAT_VERSION},
        "name": {"type": "string"},
        "num_classes": {"type": "integer", "minimum": 1},
        "input_shape": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "splits": {
            "type": "object",
            "properties": {
                split.value: {
                    "type": "object",
                    "properties": {
                        "count": {"type": "integer", "minimum": 1},
                        "class_counts": {"type": "array", "items": {"type": "integer"}},
                        "inputs": _FILE_ENTRY,
                        "labels": _FILE_ENTRY,
                    },
                    "required": ["count", "inputs", "labels"],
                }
                for split in Split
            },
            "required": [split.value for split in Split],
        },
        "provenance": {"type": "object"},
    },
    "required": ["format", "version", "num_classes", "input_shape", "splits"],
}


def _write(directory: Path, name: str, blob: bytes) -> dict[str, Any]:
    (directory / name).write_bytes(blob)
    return {"file": name, "sha256": hashlib.sha256(blob).hexdigest(), "bytes": len(blob)}


def _read_checked(directory: Path, entry: dict[str, Any]) -> bytes:
    path = directory / entry["file"]
    if not path.is_file():
        raise DatasetError(f"missing payload file {path}")
    blob = path.read_bytes()
    if hashlib.sha256(blob).hexdigest() != entry["sha256"]:
        raise ChecksumError(
            f"checksum mismatch for {path} ({len(blob)} bytes, manifest says {entry['bytes']})"
        )
    return blob


def save_dataset(splits: DatasetSplits, path: str | Path) -> Path:
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    entries: dict[str, Any] = {}
    for split in Split:
        ds = splits[split]
        entries[split.value] = {
            "count": len(ds),
            "class_counts": ds.class_counts(),
            "inputs": _write(directory, f"{split.value}.bin", tensor_to_bytes(ds.inputs)),
            "labels": _write(
                directory, f"{split.value}.labels", ds.labels.astype("<u4").tobytes()
            ),
        }
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": splits.train.name,
        "num_classes": splits.num_classes,
        "input_shape": list(splits.input_shape),
        "splits": entries,
        "provenance": splits.provenance,
    }
    (directory / MANIFEST_NAME).write_bytes(dump_json(manifest))
    logger.info("Saved dataset '%s' to %s", splits.train.name, directory)
    return directory


def load_dataset(path: str | Path) -> DatasetSplits:
    directory = Path(path)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DatasetError(f"no {MANIFEST_NAME} in {directory}")
    try:
        manifest = orjson.loads(manifest_path.read_bytes())
        validate(manifest, DATASET_SCHEMA)
    except orjson.JSONDecodeError as exc:
        raise DatasetError(f"{manifest_path}: not valid JSON ({exc})") from exc
    except ValidationError as exc:
        raise DatasetError(f"{manifest_path}: malformed manifest ({exc.message})") from exc

    parts: dict[Split, Dataset] = {}
    for split in Split:
        entry = manifest["splits"][split.value]
        try:
            inputs = tensor_from_bytes(_read_checked(directory, entry["inputs"]))
        except TensorFormatError as exc:
            raise DatasetError(f"{split.value} inputs: {exc}") from exc
        labels = np.frombuffer(_read_checked(directory, entry["labels"]), dtype="<u4")
        if inputs.shape[1:] != tuple(manifest["input_shape"]) or inputs.shape[0] != entry["count"]:
            raise DatasetError(
                f"{split.value} inputs have shape {inputs.shape}, manifest says "
                f"{entry['count']} x {manifest['input_shape']}"
            )
        if labels.size != entry["count"]:
            raise DatasetError(f"{split.value}: {labels.size} labels for {entry['count']} samples")
        parts[split] = Dataset(
            inputs,
            labels.astype(np.int64),
            manifest["num_classes"],
            split,
            manifest.get("name", ""),
        )
    logger.info("Loaded dataset '%s' from %s", manifest.get("name", ""), directory)
    return DatasetSplits(
        parts[Split.TRAIN], parts[Split.VAL], parts[Split.TEST], manifest.get("provenance", {})
    )


def read_csv_dataset(path: str | Path, num_classes: int | None = None, name: str = "") -> Dataset:
    """Read a vector dataset: header row, one column named ``label``, the rest features."""
    path = Path(path)
    with path.open("r", newline="", encoding="utf-8") as fp:
        reader = csv.reader(fp)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty CSV file") from None
        header = [h.strip() for h in header]
        if LABEL_COLUMN not in header:
            raise DatasetError(f"{path}: no '{LABEL_COLUMN}' column in header {header}")
        label_at = header.index(LABEL_COLUMN)
        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                labels.append(int(row[label_at]))
                rows.append([float(v) for i, v in enumerate(row) if i != label_at])
            except ValueError as exc:
                raise DatasetError(f"{path}:{line_no}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    label_array = np.asarray(labels, dtype=np.int64)
    k = num_classes if num_classes is not None else int(label_array.max()) + 1
    return Dataset(Tensor(rows), label_array, k, Split.TRAIN, name or path.stem)


def import_csv(
    path: str | Path, rng: Rng, num_classes: int | None = None, name: str = ""
) -> DatasetSplits:
    full = read_csv_dataset(path, num_classes, name)
    return split_dataset(
        full.inputs,
        full.labels,
        full.num_classes,
        rng,
        name=full.name,
        provenance={"generator": "csv", "source": str(path)},
    )


def export_csv(dataset: Dataset, path: str | Path) -> Path:
    if len(dataset.input_shape) != 1:
        raise DatasetError(f"CSV export needs vector inputs, got shape {dataset.input_shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow([*(f"x{j}" for j in range(dataset.input_shape[0])), LABEL_COLUMN])
        for row, label in zip(dataset.inputs.array, dataset.labels, strict=True):
            writer.writerow([*(repr(float(v)) for v in row), int(label)])
    return path
