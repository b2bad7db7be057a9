from __future__ import annotations

import numpy as np

from gtn.errors import DimensionError, LabelError, LayerStateError
from gtn.tensor import Tensor


def validate_labels(labels: np.ndarray, batch: int, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (batch,):
        raise DimensionError(f"expected {batch} labels, got array of shape {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        raise LabelError(f"labels must be integers, got dtype {labels.dtype}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelError(
            f"label out of range [0, {num_classes}): min={labels.min()}, max={labels.max()}"
        )
    return labels.astype(np.int64)


class SoftmaxCrossEntropy:
    """Mean softmax cross-entropy over a batch, with max-subtraction."""

    def __init__(self, name: str = "cross_entropy") -> None:
        self.name = name
        self._cache: tuple[np.ndarray, np.ndarray] | None = None

    def forward(self, logits: Tensor, labels: np.ndarray) -> float:
        if logits.ndim != 2:
            raise DimensionError(f"{self.name}: logits must be [B x K], got shape {logits.shape}")
        batch, num_classes = logits.shape
        labels = validate_labels(labels, batch, num_classes)
        shifted = logits.array - logits.array.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        losses = log_norm - shifted[np.arange(batch), labels]
        probs = np.exp(shifted - log_norm[:, None])
        self._cache = (probs, labels)
        return float(losses.mean())

    def backward(self, scale: float = 1.0) -> Tensor:
        """dL/dlogits of ``scale`` times the mean loss."""
        if self._cache is None:
            raise LayerStateError(f"{self.name}: backward called before forward")
        probs, labels = self._cache
        self._cache = None
        batch = probs.shape[0]
        grad = probs.copy()
        grad[np.arange(batch), labels] -= 1.0
        return Tensor.wrap(grad * (scale / batch), self.name)


def predictions(logits: Tensor) -> np.ndarray:
    return logits.array.argmax(axis=1)
