"""Model checkpoints: a parameter checkpoint under ``params/`` plus ``model.json``."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import orjson
from jsonschema import ValidationError, validate

from gtn import __version__
from gtn.errors import CheckpointError
from gtn.layers.checkpoint import dump_json, load_layers, save_layers
from gtn.model.backbone import Backbone, BackboneSpec
from gtn.model.network import GtnModel
from gtn.model.registry import VariantOptions, build_model
from gtn.tensor import Rng
from gtn.transfer import GateVariant

logger = logging.getLogger(__name__)

MODEL_FILE = "model.json"
PARAMS_DIR = "params"

MODEL_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "variant": {"type": "string"},
        "num_classes": {"type": "integer", "minimum": 1},
        "lam": {"type": "number", "minimum": 0},
        "aux_tap": {"type": "integer", "minimum": 0},
        "aux_head": {"type": "boolean"},
        "frozen": {"type": "array", "items": {"type": "string"}},
        "backbone": {"type": "object"},
        "transfer": {"type": ["object", "null"]},
        "version": {"type": "string"},
    },
    "required": ["variant", "num_classes", "lam", "backbone", "frozen"],
}


def model_metadata(model: GtnModel) -> dict[str, Any]:
    transfer = model.transfer
    return {
        "variant": model.variant,
        "num_classes": model.num_classes,
        "lam": model.lam,
        "aux_tap": model.backbone.spec.aux_tap,
        "aux_head": model.aux_head is not None,
        "frozen": sorted(model.frozen),
        "backbone": model.backbone.spec.to_dict(),
        "transfer": transfer.hyperparameters() if transfer is not None else None,
        "version": __version__,
    }


def save_model(model: GtnModel, directory: str | Path, extra: dict[str, Any] | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = model_metadata(model)
    if extra:
        meta["extra"] = extra
    save_layers(model.named_leaves(), directory / PARAMS_DIR, metadata={"variant": model.variant})
    (directory / MODEL_FILE).write_bytes(dump_json(meta))
    logger.info("Saved %s model checkpoint to %s", model.variant, directory)
    return directory


def read_model_metadata(directory: str | Path) -> dict[str, Any]:
    path = Path(directory) / MODEL_FILE
    if not path.is_file():
        raise CheckpointError(f"{directory} is not a model checkpoint (no {MODEL_FILE})")
    try:
        meta = orjson.loads(path.read_bytes())
        validate(meta, MODEL_SCHEMA)
    except orjson.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON ({exc})") from exc
    except ValidationError as exc:
        raise CheckpointError(f"{path}: malformed model metadata ({exc.message})") from exc
    return meta


def load_model(directory: str | Path, rng: Rng | None = None) -> GtnModel:
    """Rebuild a model from its metadata and copy the stored tensors into it."""
    directory = Path(directory)
    meta = read_model_metadata(directory)
    backbone = Backbone(BackboneSpec.from_dict(meta["backbone"]))
    transfer = meta.get("transfer") or {}
    options = VariantOptions(
        lam=meta["lam"],
        reduction=transfer.get("reduction", 16),
        p1=transfer.get("p1", 0.5),
        p2=transfer.get("p2", 0.7),
        bias=transfer.get("bias", backbone.spec.bias),
        residual_sigmoid=transfer.get("residual_sigmoid", True),
        gate_variant=GateVariant(transfer["variant"]) if transfer else None,
    )
    model = build_model(meta["variant"], backbone, meta["num_classes"], options, rng)
    if not meta.get("aux_head", False):
        model.drop_aux_head()
    for group in meta["frozen"]:
        model.freeze(group)
    load_layers(model.named_leaves(), directory / PARAMS_DIR)
    return model


def attach_backbone(model: GtnModel, source: str | Path) -> None:
    """Copy pretrained backbone tensors from a model checkpoint into ``model``."""
    source = Path(source)
    meta = read_model_metadata(source)
    stored = BackboneSpec.from_dict(meta["backbone"])
    if stored != model.backbone.spec:
        raise CheckpointError(
            f"backbone in {source} ({stored.to_dict()}) does not match the model "
            f"({model.backbone.spec.to_dict()})"
        )
    load_layers(model.backbone.named_leaves(), source / PARAMS_DIR)
    logger.info("Attached pretrained backbone from %s", source)
