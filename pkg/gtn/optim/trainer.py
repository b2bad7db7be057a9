"""Epoch loop, evaluation and the full fine-tuning run."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from gtn.data.augment import AugmentationPolicy, augment
from gtn.data.dataset import Dataset
from gtn.errors import GtnError, TrainingError
from gtn.layers.base import Mode
from gtn.layers.batchnorm import BatchNorm1dLayer
from gtn.layers.loss import SoftmaxCrossEntropy, predictions
from gtn.model.checkpoint import save_model
from gtn.model.network import GtnModel
from gtn.optim.protocol import FreezeProtocol
from gtn.optim.schedule import PlateauSchedule, schedule_step
from gtn.optim.sgd import Sgd, SgdState
from gtn.tensor import Rng

logger = logging.getLogger(__name__)

LOG_COLUMNS = (
    "epoch",
    "lr",
    "train_loss",
    "train_acc",
    "val_loss",
    "val_acc",
    "main_loss",
    "aux_loss",
    "gate_mean",
    "gate_std",
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    patience: int = 3
    factor: float = 0.1
    min_delta: float = 1e-4
    min_lr: float = 1e-5
    freeze_epochs: int = 5
    checkpoint_every: int = 0
    eval_batch_size: int = 256

    def schedule(self) -> PlateauSchedule:
        return PlateauSchedule(
            initial_lr=self.lr,
            factor=self.factor,
            patience=self.patience,
            min_delta=self.min_delta,
            min_lr=self.min_lr,
        )

    def sgd_state(self) -> SgdState:
        return SgdState(lr=self.lr, momentum=self.momentum, weight_decay=self.weight_decay)


@dataclass(frozen=True)
class EvalResult:
    loss: float
    accuracy: float
    count: int
    gate_mean: float | None = None
    gate_std: float | None = None

    @property
    def error(self) -> float:
        return 1.0 - self.accuracy


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    lr: float
    loss: float
    accuracy: float
    main_loss: float
    aux_loss: float
    gate_mean: float | None
    gate_std: float | None
    frozen: tuple[str, ...] = ()
    val: EvalResult | None = None

    def row(self) -> dict[str, Any]:
        has_val = self.val is not None and self.val.gate_mean is not None
        gate_mean = self.val.gate_mean if has_val else self.gate_mean
        gate_std = self.val.gate_std if has_val else self.gate_std
        return {
            "epoch": self.epoch + 1,
            "lr": self.lr,
            "train_loss": self.loss,
            "train_acc": self.accuracy,
            "val_loss": self.val.loss if self.val else None,
            "val_acc": self.val.accuracy if self.val else None,
            "main_loss": self.main_loss,
            "aux_loss": self.aux_loss,
            "gate_mean": gate_mean,
            "gate_std": gate_std,
        }


class _GateMoments:
    """Running mean/std of gate entries, accumulated batch by batch in order."""

    def __init__(self) -> None:
        self.count = 0
        self.total = 0.0
        self.total_sq = 0.0

    def add(self, gate: np.ndarray | None) -> None:
        if gate is None:
            return
        self.count += gate.size
        self.total += float(gate.sum())
        self.total_sq += float(np.square(gate).sum())

    def result(self) -> tuple[float | None, float | None]:
        if self.count == 0:
            return None, None
        mean = self.total / self.count
        return mean, float(np.sqrt(max(self.total_sq / self.count - mean * mean, 0.0)))


def _min_batch(model: GtnModel) -> int:
    return 2 if any(isinstance(layer, BatchNorm1dLayer) for layer in model.walk()) else 1


def train_epoch(
    model: GtnModel,
    dataset: Dataset,
    optimizer: Sgd,
    schedule: PlateauSchedule,
    protocol: FreezeProtocol,
    rng: Rng,
    *,
    epoch: int = 0,
    batch_size: int = 32,
    policy: AugmentationPolicy | None = None,
) -> EpochStats:
    """One shuffled pass over ``dataset``; ``rng`` is this epoch's own stream."""
    protocol.apply(model, epoch)
    optimizer.lr = schedule.lr
    shuffle_rng, augment_rng = rng.split("shuffle"), rng.split("augment")
    n_seen = 0
    sums = {"total": 0.0, "main": 0.0, "aux": 0.0}
    correct = 0
    gates = _GateMoments()
    batches = dataset.batches(batch_size, shuffle_rng, min_batch=_min_batch(model))
    for index, (x, labels) in enumerate(batches):
        try:
            if policy is not None:
                x = augment(x, policy, augment_rng, Mode.TRAIN)
            optimizer.zero_grad()
            output = model.forward(x, Mode.TRAIN)
            losses = model.loss(output, labels)
            model.backward()
            optimizer.step()
        except GtnError as exc:
            raise TrainingError(str(exc), epoch=epoch, batch=index) from exc
        n = labels.shape[0]
        n_seen += n
        sums["total"] += losses.total * n
        sums["main"] += losses.main * n
        sums["aux"] += losses.aux * n
        correct += int(np.sum(predictions(output.main_logits) == labels))
        gates.add(output.gate.array if output.gate is not None else None)
    if n_seen == 0:
        raise TrainingError(f"dataset '{dataset.name}' produced no batches", epoch=epoch)
    gate_mean, gate_std = gates.result()
    return EpochStats(
        epoch=epoch,
        lr=optimizer.lr,
        loss=sums["total"] / n_seen,
        accuracy=correct / n_seen,
        main_loss=sums["main"] / n_seen,
        aux_loss=sums["aux"] / n_seen,
        gate_mean=gate_mean,
        gate_std=gate_std,
        frozen=tuple(sorted(model.frozen)),
    )


def evaluate(
    model: GtnModel,
    dataset: Dataset,
    batch_size: int = 256,
    policy: AugmentationPolicy | None = None,
) -> EvalResult:
    """Main-head loss and accuracy in eval mode, reduced over batches in dataset order."""
    criterion = SoftmaxCrossEntropy("eval_loss")
    loss_sum = 0.0
    correct = 0
    gates = _GateMoments()
    for x, labels in dataset.batches(batch_size):
        if policy is not None:
            x = augment(x, policy, None, Mode.EVAL)
        output = model.forward(x, Mode.EVAL, compute_aux=False)
        loss_sum += criterion.forward(output.main_logits, labels) * labels.shape[0]
        correct += int(np.sum(predictions(output.main_logits) == labels))
        gates.add(output.gate.array if output.gate is not None else None)
    gate_mean, gate_std = gates.result()
    n = len(dataset)
    return EvalResult(loss_sum / n, correct / n, n, gate_mean, gate_std)


@dataclass
class FitResult:
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_val_accuracy: float = 0.0
    final_lr: float = 0.0

    @property
    def epochs_to_best(self) -> int:
        return self.best_epoch

    def summary(self) -> dict[str, Any]:
        return {
            "epochs": len(self.history),
            "best_epoch": self.best_epoch,
            "best_val_accuracy": self.best_val_accuracy,
            "epochs_to_best": self.epochs_to_best,
            "final_lr": self.final_lr,
            "lr_triggers": sum(
                1 for a, b in zip(self.history, self.history[1:], strict=False) if b.lr < a.lr
            ),
        }


class TrainingLog:
    """CSV training log, one row per epoch."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as fp:
            csv.writer(fp).writerow(LOG_COLUMNS)

    def append(self, stats: EpochStats) -> None:
        row = stats.row()
        with self.path.open("a", newline="", encoding="utf-8") as fp:
            csv.writer(fp).writerow(["" if row[c] is None else repr(row[c]) for c in LOG_COLUMNS])


class Trainer:
    """Runs freeze-then-joint fine-tuning with a plateau schedule on validation error."""

    def __init__(
        self,
        model: GtnModel,
        config: TrainConfig,
        rng: Rng,
        *,
        protocol: FreezeProtocol | None = None,
        log_path: str | Path | None = None,
        checkpoint_dir: str | Path | None = None,
        policy: AugmentationPolicy | None = None,
        context: dict[str, Any] | None = None,
    ) -> None:
        self.model = model
        self.config = config
        self.rng = rng
        self.protocol = protocol or FreezeProtocol(config.freeze_epochs)
        self.schedule = config.schedule()
        self.optimizer = Sgd(model, config.sgd_state())
        self.log = TrainingLog(log_path) if log_path is not None else None
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
        self.policy = policy
        self.context = context or {}

    def fit(self, train: Dataset, val: Dataset | None = None) -> FitResult:
        self.model.set_dropout_rng(self.rng.split("dropout"))
        result = FitResult(final_lr=self.schedule.lr)
        errors: list[float] = []
        for epoch in range(self.config.epochs):
            stats = train_epoch(
                self.model,
                train,
                self.optimizer,
                self.schedule,
                self.protocol,
                self.rng.split(f"epoch{epoch}"),
                epoch=epoch,
                batch_size=self.config.batch_size,
                policy=self.policy,
            )
            val_result = None
            if val is not None:
                val_result = evaluate(self.model, val, self.config.eval_batch_size, self.policy)
                stats = replace(stats, val=val_result)
            errors.append(val_result.error if val_result else 1.0 - stats.accuracy)
            schedule_step(self.schedule, errors)
            result.history.append(stats)
            score = val_result.accuracy if val_result else stats.accuracy
            if result.best_epoch == 0 or score > result.best_val_accuracy:
                result.best_epoch = epoch + 1
                result.best_val_accuracy = score
            if self.log is not None:
                self.log.append(stats)
            logger.info(
                "epoch %d lr=%.3g loss=%.4f acc=%.3f val_acc=%s",
                epoch + 1,
                stats.lr,
                stats.loss,
                stats.accuracy,
                f"{val_result.accuracy:.3f}" if val_result else "-",
                extra={**self.context, "epoch": epoch + 1},
            )
            every = self.config.checkpoint_every
            if self.checkpoint_dir is not None and every > 0 and (epoch + 1) % every == 0:
                save_model(self.model, self.checkpoint_dir / f"epoch-{epoch + 1:03d}")
        result.final_lr = self.schedule.lr
        return result
