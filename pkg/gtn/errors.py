"""Exception hierarchy shared by every gtn sub-package."""
from __future__ import annotations


class GtnError(Exception):
    """Base class for all errors raised by gtn."""


class DimensionError(GtnError, ValueError):
    """Shapes of operands do not agree."""


class NonFiniteError(GtnError, ArithmeticError):
    """An operation produced NaN or Inf."""

    def __init__(self, where: str, detail: str = "") -> None:
        self.where = where
        message = f"non-finite value produced by {where}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class TensorFormatError(GtnError, ValueError):
    """Serialized tensor bytes are malformed."""


class LayerStateError(GtnError, RuntimeError):
    """A layer was driven out of order (e.g. backward before forward)."""


class LabelError(GtnError, ValueError):
    """Class label outside [0, K)."""


class DatasetError(GtnError, ValueError):
    """Malformed, empty or inconsistent dataset."""


class ChecksumError(DatasetError):
    """Payload on disk does not match the checksum recorded in its manifest."""


class CheckpointError(GtnError, ValueError):
    """Checkpoint is malformed or incompatible with the target model."""


class AugmentationError(GtnError, ValueError):
    """Augmentation policy cannot be applied to the given batch."""


class GateRangeError(GtnError, ValueError):
    """Gate values outside [0, 1] were passed to an analysis routine."""


class TrainingError(GtnError, RuntimeError):
    """Failure inside the training loop, annotated with epoch/batch context."""

    def __init__(self, message: str, *, epoch: int | None = None, batch: int | None = None) -> None:
        self.epoch = epoch
        self.batch = batch
        context = []
        if epoch is not None:
            context.append(f"epoch={epoch}")
        if batch is not None:
            context.append(f"batch={batch}")
        if context:
            message = f"[{' '.join(context)}] {message}"
        super().__init__(message)
