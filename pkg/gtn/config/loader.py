from __future__ import annotations

import logging
import os
import re
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any, Literal, get_origin

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from gtn.config.settings import get_settings
from gtn.data.augment import AugmentationPolicy
from gtn.data.synthetic import SyntheticTransferSpec
from gtn.model.backbone import BackboneKind, BackboneSpec
from gtn.model.registry import MODEL_VARIANTS, VariantOptions
from gtn.optim.trainer import TrainConfig
from gtn.transfer import GateVariant

logger = logging.getLogger(__name__)
_ENV_VAR_PATTERN = re.compile(r"\$\{([A-Z0-9_]+)(?::-([^}]*))?\}")


# ---------------------------------------------------------------------------
# Pydantic schemas for each config section
# ---------------------------------------------------------------------------


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    backbone: Literal["mlp", "cnn"] = "mlp"
    widths: list[int] = Field(default_factory=lambda: [256, 128])
    channels: list[int] = Field(default_factory=lambda: [16, 32, 64])
    aux_tap: int | None = None
    variant: str = "gtn"
    gate_variant: Literal["gated", "residual", "identity", "fixed_feature"] | None = None
    reduction: int = Field(16, ge=1)
    p1: float = Field(0.5, ge=0.0, lt=1.0)
    p2: float = Field(0.7, ge=0.0, lt=1.0)
    lam: float = Field(0.2, ge=0.0)
    bias: bool = True
    residual_sigmoid: bool = True

    @field_validator("variant")
    @classmethod
    def variant_must_be_known(cls, v: str) -> str:
        if v not in MODEL_VARIANTS:
            raise ValueError(f"Unknown model variant '{v}'. Allowed: {sorted(MODEL_VARIANTS)}")
        return v


class OptimSection(_Section):
    epochs: int = Field(30, ge=0)
    pretrain_epochs: int = Field(30, ge=0)
    lwf_epochs: int = Field(10, ge=0)
    batch_size: int = Field(32, ge=1)
    eval_batch_size: int = Field(256, ge=1)
    lr: float = Field(0.01, ge=0.0)
    momentum: float = Field(0.9, ge=0.0)
    weight_decay: float = Field(1e-4, ge=0.0)
    patience: int = Field(3, ge=1)
    factor: float = Field(0.1, gt=0.0, lt=1.0)
    min_delta: float = Field(1e-4, ge=0.0)
    min_lr: float = Field(1e-5, ge=0.0)
    freeze_epochs: int = Field(5, ge=0)
    checkpoint_every: int = Field(0, ge=0)


class DataSection(_Section):
    path: str | None = None
    input_dim: int = Field(64, ge=1)
    source_classes: int = Field(8, ge=1)
    target_classes: int = Field(4, ge=1)
    samples_per_class: int = Field(200, ge=1)
    noise_std: float = Field(0.5, gt=0.0)
    overlap: float = Field(0.3, ge=0.0, le=1.0)
    factors_per_task: int = Field(16, ge=1)
    prototype_scale: float = 1.0
    shared_prototypes: bool = False
    image_shape: list[int] | None = None
    augment: bool = False
    resize_short: int = Field(36, ge=1)
    crop_size: int = Field(32, ge=1)
    flip_prob: float = Field(0.5, ge=0.0, le=1.0)


class AnalysisSection(_Section):
    samples: int = Field(100, ge=1)
    batch_size: int = Field(100, ge=1)
    thresholds: list[float] = Field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    export_features: bool = True


class ReproduceSection(_Section):
    criteria: list[int] = Field(default_factory=lambda: list(range(1, 11)))
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    gradcheck_tol: float = 1e-5
    gradcheck_tol_deterministic: float = 1e-6
    gate_draws: int = Field(10_000, ge=1)
    bypass_epochs: int = Field(10, ge=1)
    transfer_margin: float = 0.005
    lwf_margin: float = 0.02
    overlap_low: float = Field(0.1, ge=0.0, le=1.0)
    overlap_high: float = Field(0.9, ge=0.0, le=1.0)
    analysis_tol: float = 1e-12
    lambdas: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.4, 0.8])

    @field_validator("criteria")
    @classmethod
    def criteria_in_range(cls, v: list[int]) -> list[int]:
        bad = [c for c in v if not 1 <= c <= 10]
        if bad:
            raise ValueError(f"criteria ids must be in 1..10, got {bad}")
        return sorted(set(v))


class ExperimentConfig(_Section):
    model: ModelSection = Field(default_factory=ModelSection)
    optim: OptimSection = Field(default_factory=OptimSection)
    data: DataSection = Field(default_factory=DataSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    reproduce: ReproduceSection = Field(default_factory=ReproduceSection)
    seeds: list[int] = Field(default_factory=lambda: [0])
    output_dir: str = Field(default_factory=lambda: get_settings().runs_dir)
    jobs: int = Field(1, ge=1)

    @field_validator("seeds")
    @classmethod
    def seeds_not_empty(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("at least one seed is required")
        return v

    # -- mapping onto the runtime objects ---------------------------------

    def train_config(
        self, *, epochs: int | None = None, freeze_epochs: int | None = None
    ) -> TrainConfig:
        o = self.optim
        return TrainConfig(
            epochs=o.epochs if epochs is None else epochs,
            batch_size=o.batch_size,
            lr=o.lr,
            momentum=o.momentum,
            weight_decay=o.weight_decay,
            patience=o.patience,
            factor=o.factor,
            min_delta=o.min_delta,
            min_lr=o.min_lr,
            freeze_epochs=o.freeze_epochs if freeze_epochs is None else freeze_epochs,
            checkpoint_every=o.checkpoint_every,
            eval_batch_size=o.eval_batch_size,
        )

    def variant_options(self, **changes: Any) -> VariantOptions:
        m = self.model
        gate = changes.pop("gate_variant", m.gate_variant)
        values: dict[str, Any] = {
            "lam": m.lam,
            "reduction": m.reduction,
            "p1": m.p1,
            "p2": m.p2,
            "bias": m.bias,
            "residual_sigmoid": m.residual_sigmoid,
        }
        values.update(changes)
        return VariantOptions(**values, gate_variant=GateVariant(gate) if gate else None)

    def backbone_spec(self, input_shape: Iterable[int]) -> BackboneSpec:
        m = self.model
        return BackboneSpec(
            kind=BackboneKind(m.backbone),
            input_shape=tuple(input_shape),
            widths=tuple(m.widths),
            channels=tuple(m.channels),
            aux_tap=m.aux_tap,
            bias=m.bias,
        )

    def synthetic_spec(self, seed: int, *, overlap: float | None = None) -> SyntheticTransferSpec:
        d = self.data
        return SyntheticTransferSpec(
            input_dim=d.input_dim,
            source_classes=d.source_classes,
            target_classes=d.target_classes,
            samples_per_class=d.samples_per_class,
            noise_std=d.noise_std,
            overlap=d.overlap if overlap is None else overlap,
            factors_per_task=d.factors_per_task,
            prototype_scale=d.prototype_scale,
            shared_prototypes=d.shared_prototypes,
            image_shape=tuple(d.image_shape) if d.image_shape else None,
            seed=seed,
        )

    def augmentation_policy(self) -> AugmentationPolicy | None:
        d = self.data
        if not d.augment:
            return None
        return AugmentationPolicy(
            resize_short=d.resize_short, crop_size=d.crop_size, flip_prob=d.flip_prob
        )


# ---------------------------------------------------------------------------
# Loader
# ---------------------------------------------------------------------------


class ConfigValidationError(RuntimeError):
    """Raised when an experiment config fails strict schema validation."""


def leaf_keys(model: type[BaseModel] = ExperimentConfig, prefix: str = "") -> list[str]:
    """Dotted names of every scalar or list setting, e.g. ``optim.lr``."""
    keys: list[str] = []
    for name, field in model.model_fields.items():
        annotation = field.annotation
        if get_origin(annotation) is None and isinstance(annotation, type) and issubclass(
            annotation, BaseModel
        ):
            keys.extend(leaf_keys(annotation, f"{prefix}{name}."))
        else:
            keys.append(f"{prefix}{name}")
    return keys


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``section.key=value``; the value is parsed as a YAML scalar so it is typed."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigValidationError(f"Override '{text}' must look like section.key=value")
    return key.strip(), yaml.safe_load(raw) if raw.strip() else None


def apply_overrides(data: dict[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    known = set(leaf_keys())
    for key, value in overrides.items():
        if key not in known:
            raise ConfigValidationError(f"Unknown config key '{key}'. Known keys: {sorted(known)}")
        node = data
        *parents, leaf = key.split(".")
        for part in parents:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        node[leaf] = value
    return data


class ExperimentConfigLoader:
    def __init__(self, base_path: str | Path = "config") -> None:
        self.base_path = Path(base_path)

    def _expand_env_value(self, value: Any) -> Any:
        if isinstance(value, dict):
            return {k: self._expand_env_value(v) for k, v in value.items()}
        if isinstance(value, list):
            return [self._expand_env_value(v) for v in value]
        if isinstance(value, str):
            return self._expand_env_string(value)
        return value

    def _expand_env_string(self, value: str) -> Any:
        def _replace(match: re.Match[str]) -> str:
            key = match.group(1)
            default = match.group(2)
            env_value = os.getenv(key)
            if env_value is not None:
                return env_value
            if default is not None:
                return default
            logger.warning("Config placeholder %s is not set; substituting empty string", key)
            return ""

        expanded = _ENV_VAR_PATTERN.sub(_replace, value)
        # a value that was only a placeholder is re-typed, so ${EPOCHS:-30} stays an int
        if expanded != value and _ENV_VAR_PATTERN.fullmatch(value):
            return yaml.safe_load(expanded) if expanded else None
        return expanded

    def resolve_path(self, path: str | Path) -> Path:
        path = Path(path)
        if path.exists() or path.is_absolute():
            return path
        candidate = self.base_path / path
        if candidate.exists():
            return candidate
        return candidate.with_suffix(".yaml") if not candidate.suffix else candidate

    def read_text(self, path: str | Path | None) -> str:
        if path is None:
            return ""
        resolved = self.resolve_path(path)
        if not resolved.exists():
            raise ConfigValidationError(f"Config file not found: {resolved}")
        return resolved.read_text(encoding="utf-8")

    def load_yaml(self, path: str | Path | None) -> dict[str, Any]:
        text = self.read_text(path)
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigValidationError(f"{path}: invalid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigValidationError(f"{path}: top level must be a mapping")
        return self._expand_env_value(data)

    def load(
        self, path: str | Path | None = None, overrides: Mapping[str, Any] | None = None
    ) -> ExperimentConfig:
        """Load + validate one config file. Raises ConfigValidationError listing every bad key."""
        raw = apply_overrides(self.load_yaml(path), overrides or {})
        try:
            config = ExperimentConfig.model_validate(raw)
        except ValidationError as exc:
            detail = "\n".join(
                f"  {'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
            )
            source = path or "defaults"
            raise ConfigValidationError(
                f"Config validation failed for {source}:\n{detail}"
            ) from exc
        logger.info(
            "Config validated OK: variant=%s, %d seed(s), output_dir=%s",
            config.model.variant,
            len(config.seeds),
            config.output_dir,
        )
        return config
