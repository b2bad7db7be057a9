"""Single-seed stages: source pretraining, target transfer, evaluation and relearning.

Every stage derives its random streams from ``Rng(seed).split(<stage>)`` so a
stage's outcome depends only on the config, the seed and its inputs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from gtn.analysis import (
    GateReport,
    build_report,
    collect_gates,
    export_features,
    write_report,
)
from gtn.config.loader import ExperimentConfig
from gtn.data import (
    DatasetSplits,
    FactorLayout,
    generate_synthetic,
    informative_channels,
    load_dataset,
)
from gtn.errors import GateRangeError
from gtn.layers.base import Mode
from gtn.layers.checkpoint import dump_json
from gtn.layers.linear import LinearLayer
from gtn.model import Backbone, GtnModel, attach_backbone, build_model, load_model, save_model
from gtn.optim import NO_FREEZE, EvalResult, FitResult, FreezeProtocol, Trainer, evaluate
from gtn.tensor import Rng

logger = logging.getLogger(__name__)

CHECKPOINT_DIR = "checkpoint"
TRAIN_LOG = "train_log.csv"
METRICS_FILE = "metrics.json"


@dataclass
class TaskPair:
    source: DatasetSplits
    target: DatasetSplits
    layout: FactorLayout | None = None


def load_tasks(config: ExperimentConfig, seed: int, *, overlap: float | None = None) -> TaskPair:
    """Synthetic source/target pair for ``seed``, or the pair saved under ``data.path``."""
    if config.data.path:
        root = Path(config.data.path)
        return TaskPair(load_dataset(root / "source"), load_dataset(root / "target"))
    task = generate_synthetic(config.synthetic_spec(seed, overlap=overlap))
    return TaskPair(task.source, task.target, task.layout)


@dataclass
class StageResult:
    model: GtnModel
    fit: FitResult
    val: EvalResult
    test: EvalResult
    checkpoint: Path | None = None
    report: GateReport | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def metrics(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "variant": self.model.variant,
            "val_accuracy": self.val.accuracy,
            "val_loss": self.val.loss,
            "test_accuracy": self.test.accuracy,
            "test_loss": self.test.loss,
            "gate_mean": self.report.gate_mean if self.report else None,
            **self.fit.summary(),
        }
        data.update(self.extras)
        return data


def _finish(
    result: StageResult, out: Path | None, extra: dict[str, Any], *, drop_aux: bool = True
) -> StageResult:
    if drop_aux:
        result.model.drop_aux_head()
    if out is not None:
        result.checkpoint = save_model(result.model, out / CHECKPOINT_DIR, extra=extra)
        (out / METRICS_FILE).write_bytes(dump_json(result.metrics()))
    return result


def _trainer(
    config: ExperimentConfig,
    model: GtnModel,
    rng: Rng,
    out: Path | None,
    *,
    epochs: int,
    protocol: FreezeProtocol,
    seed: int,
) -> Trainer:
    checkpoints = out / "epochs" if out is not None and config.optim.checkpoint_every else None
    return Trainer(
        model,
        config.train_config(epochs=epochs, freeze_epochs=protocol.freeze_epochs),
        rng,
        protocol=protocol,
        log_path=out / TRAIN_LOG if out is not None else None,
        checkpoint_dir=checkpoints,
        policy=config.augmentation_policy(),
        context={"seed": seed, "variant": model.variant},
    )


def pretrain_source(
    config: ExperimentConfig,
    seed: int,
    source: DatasetSplits,
    out: Path | None = None,
    *,
    epochs: int | None = None,
) -> StageResult:
    """Train backbone + plain classifier on the source task."""
    rng = Rng(seed).split("pretrain")
    backbone = Backbone(config.backbone_spec(source.input_shape), rng.split("backbone"))
    model = build_model(
        "plain", backbone, source.num_classes, config.variant_options(), rng.split("model")
    )
    epochs = config.optim.pretrain_epochs if epochs is None else epochs
    trainer = _trainer(
        config, model, rng.split("train"), out, epochs=epochs, protocol=NO_FREEZE, seed=seed
    )
    fit = trainer.fit(source.train, source.val)
    batch = config.optim.eval_batch_size
    result = StageResult(
        model, fit, evaluate(model, source.val, batch), evaluate(model, source.test, batch)
    )
    logger.info(
        "Pretrained source model: test accuracy %.4f",
        result.test.accuracy,
        extra={"seed": seed, "variant": "plain"},
    )
    return _finish(result, out, {"seed": seed, "task": "source"})


def gate_report(
    config: ExperimentConfig,
    model: GtnModel,
    dataset_splits: DatasetSplits,
    seed: int,
    *,
    label: str = "",
) -> GateReport | None:
    """Gate statistics on the target test split, or None for gate-free variants."""
    if model.transfer is None:
        return None
    gates = collect_gates(
        model,
        dataset_splits.test,
        Rng(seed).split("gates"),
        samples=config.analysis.samples,
        batch_size=config.analysis.batch_size,
    )
    try:
        return build_report(
            gates,
            model=model,
            model_id=label or f"{model.variant}-seed{seed}",
            dataset_id=dataset_splits.test.name,
            thresholds=config.analysis.thresholds,
        )
    except GateRangeError as exc:
        logger.warning("No gate report for %s: %s", model.variant, exc, extra={"seed": seed})
        return None


def transfer_target(
    config: ExperimentConfig,
    seed: int,
    target: DatasetSplits,
    source_checkpoint: str | Path,
    out: Path | None = None,
    *,
    variant: str | None = None,
    option_changes: dict[str, Any] | None = None,
    epochs: int | None = None,
    label: str = "",
) -> StageResult:
    """New head for the target classes, pretrained backbone, freeze-then-joint training."""
    variant = variant or config.model.variant
    rng = Rng(seed).split("transfer")
    backbone = Backbone(config.backbone_spec(target.input_shape), rng.split("backbone"))
    options = config.variant_options(**(option_changes or {}))
    model = build_model(variant, backbone, target.num_classes, options, rng.split("model"))
    attach_backbone(model, source_checkpoint)
    checksum = model.backbone_checksum()
    epochs = config.optim.epochs if epochs is None else epochs
    protocol = FreezeProtocol(config.optim.freeze_epochs)
    trainer = _trainer(
        config, model, rng.split("train"), out, epochs=epochs, protocol=protocol, seed=seed
    )
    fit = trainer.fit(target.train, target.val)
    batch = config.optim.eval_batch_size
    result = StageResult(
        model,
        fit,
        evaluate(model, target.val, batch),
        evaluate(model, target.test, batch),
        extras={
            "label": label or variant,
            "backbone_unchanged": model.backbone_checksum() == checksum,
        },
    )
    result.report = gate_report(config, model, target, seed, label=label)
    if out is not None:
        if result.report is not None:
            write_report(result.report, out / "report")
        if config.analysis.export_features:
            export_features(model, target.test, out / "features.csv", batch)
    logger.info(
        "Transferred %s: test accuracy %.4f",
        label or variant,
        result.test.accuracy,
        extra={"seed": seed, "variant": variant},
    )
    return _finish(result, out, {"seed": seed, "task": "target", "label": label or variant})


def relearn_source(
    config: ExperimentConfig,
    seed: int,
    target_checkpoint: str | Path,
    source: DatasetSplits,
    out: Path | None = None,
    *,
    epochs: int | None = None,
) -> StageResult:
    """Fresh source head on a transferred model; only the adapter and the head train."""
    transferred = load_model(target_checkpoint)
    rng = Rng(seed).split("relearn")
    head = LinearLayer(
        transferred.backbone.spec.feature_dim,
        source.num_classes,
        bias=transferred.main_head.bias is not None,
        rng=rng.split("main_head"),
        name="main_head",
    )
    model = GtnModel(
        transferred.backbone,
        head,
        adapter=transferred.adapter,
        lam=0.0,
        variant=transferred.variant,
        always_frozen=("backbone",),
    )
    epochs = config.optim.lwf_epochs if epochs is None else epochs
    trainer = _trainer(
        config, model, rng.split("train"), out, epochs=epochs, protocol=NO_FREEZE, seed=seed
    )
    fit = trainer.fit(source.train, source.val)
    batch = config.optim.eval_batch_size
    result = StageResult(
        model, fit, evaluate(model, source.val, batch), evaluate(model, source.test, batch)
    )
    return _finish(result, out, {"seed": seed, "task": "source-relearn"}, drop_aux=False)


def evaluate_checkpoint(
    checkpoint: str | Path, splits: DatasetSplits, batch_size: int = 256
) -> dict[str, EvalResult]:
    model = load_model(checkpoint)
    return {ds.split.value: evaluate(model, ds, batch_size) for ds in splits}


def informative_gate_means(
    model: GtnModel, splits: DatasetSplits, gates: np.ndarray
) -> tuple[float, float]:
    """Mean gate over target-informative and over uninformative backbone channels."""
    features = np.concatenate(
        [
            model.forward(x, Mode.EVAL, compute_aux=False).features.numpy()
            for x, _ in splits.train.batches(256)
        ]
    )
    mask = informative_channels(features, splits.train.labels, splits.num_classes)
    per_channel = gates.mean(axis=0)
    rest = per_channel[~mask]
    return float(per_channel[mask].mean()), float(rest.mean()) if rest.size else float("nan")
