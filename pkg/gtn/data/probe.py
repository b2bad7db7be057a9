"""Linear probes and channel informativeness scores."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from gtn.data.dataset import Dataset
from gtn.errors import DatasetError
from gtn.layers.base import Mode
from gtn.layers.linear import LinearLayer
from gtn.layers.loss import SoftmaxCrossEntropy, predictions
from gtn.tensor import Tensor


def _columns(ds: Dataset, dims: Sequence[int]) -> Tensor:
    flat = ds.inputs.array.reshape(len(ds), -1)
    return Tensor.wrap(flat[:, list(dims)], "probe inputs")


def probe_accuracy(
    train: Dataset,
    test: Dataset,
    dims: Sequence[int],
    *,
    epochs: int = 200,
    lr: float = 0.5,
) -> float:
    """Test accuracy of full-batch softmax regression on the selected input dims."""
    if not dims:
        raise DatasetError("probe needs at least one input dimension")
    x_train = _columns(train, dims)
    head = LinearLayer(len(dims), train.num_classes, name="probe")
    loss = SoftmaxCrossEntropy("probe_loss")
    for _ in range(epochs):
        head.zero_grad()
        loss.forward(head.forward(x_train, Mode.TRAIN), train.labels)
        head.backward(loss.backward())
        for param in head.parameters():
            param.data -= lr * param.grad
    predicted = predictions(head.forward(_columns(test, dims), Mode.EVAL))
    return float(np.mean(predicted == test.labels))


def fisher_ratio(features: np.ndarray, labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Per-channel between-class variance over mean within-class variance."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise DatasetError(f"features must be [N x C] matching {labels.shape[0]} labels")
    overall = features.mean(axis=0)
    between = np.zeros(features.shape[1])
    within = np.zeros(features.shape[1])
    n = features.shape[0]
    for c in range(num_classes):
        members = features[labels == c]
        if members.shape[0] == 0:
            continue
        weight = members.shape[0] / n
        between += weight * (members.mean(axis=0) - overall) ** 2
        within += weight * members.var(axis=0)
    return between / (within + 1e-12)


def informative_channels(features: np.ndarray, labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Boolean mask of channels whose Fisher ratio is at or above the median."""
    ratio = fisher_ratio(features, labels, num_classes)
    return ratio >= np.median(ratio)
