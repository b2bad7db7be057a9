"""Parameter checkpoints: ``manifest.json`` plus one GTN0 file per tensor."""
from __future__ import annotations

import hashlib
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import orjson
from jsonschema import ValidationError, validate

from gtn.errors import CheckpointError, TensorFormatError
from gtn.layers.base import Layer
from gtn.tensor import Tensor
from gtn.tensor.io import tensor_from_bytes, tensor_to_bytes

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
FORMAT_NAME = "gtn-params"
FORMAT_VERSION = 1

_TENSOR_ENTRY = {
    "type": "object",
    "properties": {
        "file": {"type": "string"},
        "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "trainable": {"type": "boolean"},
    },
    "required": ["file", "shape", "sha256", "trainable"],
    "additionalProperties": False,
}

MANIFEST_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "format": {"const": FORMAT_NAME},
        "version": {"const": FORMAT_VERSION},
        "layers": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "type": {"type": "string"},
                    "hyperparameters": {"type": "object"},
                    "tensors": {"type": "object", "additionalProperties": _TENSOR_ENTRY},
                },
                "required": ["name", "type", "hyperparameters", "tensors"],
            },
        },
        "metadata": {"type": "object"},
    },
    "required": ["format", "version", "layers"],
}


def dump_json(data: Any) -> bytes:
    return orjson.dumps(
        data, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
    )


def save_layers(
    named_layers: Iterable[tuple[str, Layer]],
    directory: str | Path,
    metadata: dict[str, Any] | None = None,
) -> Path:
    directory = Path(directory)
    (directory / "tensors").mkdir(parents=True, exist_ok=True)
    entries = []
    for name, layer in named_layers:
        tensors: dict[str, Any] = {}
        for param in [*layer.parameters(), *layer.buffers()]:
            blob = tensor_to_bytes(Tensor(param.data))
            rel = f"tensors/{name}.{param.name}.gtn"
            (directory / rel).write_bytes(blob)
            tensors[param.name] = {
                "file": rel,
                "shape": list(param.shape),
                "sha256": hashlib.sha256(blob).hexdigest(),
                "trainable": param.trainable,
            }
        entries.append(
            {
                "name": name,
                "type": layer.kind,
                "hyperparameters": layer.hyperparameters(),
                "tensors": tensors,
            }
        )
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "layers": entries,
        "metadata": metadata or {},
    }
    (directory / MANIFEST_NAME).write_bytes(dump_json(manifest))
    logger.info("Saved %d layers to %s", len(entries), directory)
    return directory


def read_manifest(directory: str | Path) -> dict[str, Any]:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        raise CheckpointError(f"no {MANIFEST_NAME} in {directory}")
    try:
        manifest = orjson.loads(path.read_bytes())
        validate(manifest, MANIFEST_SCHEMA)
    except orjson.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON ({exc})") from exc
    except ValidationError as exc:
        raise CheckpointError(f"{path}: malformed manifest ({exc.message})") from exc
    return manifest


def load_layers(
    named_layers: Iterable[tuple[str, Layer]],
    directory: str | Path,
    *,
    prefix: str | None = None,
) -> dict[str, Any]:
    """Copy checkpoint tensors into ``named_layers`` in place; return the metadata.

    With ``prefix`` only layers whose name starts with it are loaded (used to
    take a pretrained backbone out of a full-model checkpoint).
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    stored = {entry["name"]: entry for entry in manifest["layers"]}
    loaded = 0
    for name, layer in named_layers:
        if prefix is not None and not name.startswith(prefix):
            continue
        params = [*layer.parameters(), *layer.buffers()]
        if not params:
            continue
        entry = stored.get(name)
        if entry is None:
            raise CheckpointError(f"checkpoint {directory} has no layer '{name}'")
        if entry["type"] != layer.kind:
            raise CheckpointError(
                f"layer '{name}' is {entry['type']} in the checkpoint but {layer.kind} in the model"
            )
        for param in params:
            spec = entry["tensors"].get(param.name)
            if spec is None:
                raise CheckpointError(f"checkpoint layer '{name}' lacks tensor '{param.name}'")
            if tuple(spec["shape"]) != param.shape:
                raise CheckpointError(
                    f"shape mismatch for '{name}.{param.name}': checkpoint {tuple(spec['shape'])}, "
                    f"model {param.shape}"
                )
            blob = (directory / spec["file"]).read_bytes()
            if hashlib.sha256(blob).hexdigest() != spec["sha256"]:
                raise CheckpointError(f"checksum mismatch for {spec['file']}")
            try:
                values = tensor_from_bytes(blob)
            except TensorFormatError as exc:
                raise CheckpointError(f"{spec['file']}: {exc}") from exc
            param.data[...] = values.array
        loaded += 1
    logger.info("Loaded %d layers from %s", loaded, directory)
    return manifest.get("metadata", {})
