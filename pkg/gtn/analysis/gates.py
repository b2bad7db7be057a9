"""Gate collection and gate statistics."""
from __future__ import annotations

import logging

import numpy as np

from gtn.data.dataset import Dataset
from gtn.errors import DatasetError, DimensionError, GateRangeError
from gtn.layers.base import Mode
from gtn.model.network import GtnModel
from gtn.tensor import Rng, Tensor

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100
NUM_BINS = 10
SPARSITY_THRESHOLDS = (0.1, 0.3, 0.5, 0.7, 0.9)
_INNER_EDGES = np.arange(1, NUM_BINS) / NUM_BINS


def collect_gates(
    model: GtnModel,
    dataset: Dataset,
    rng: Rng,
    *,
    samples: int = DEFAULT_SAMPLES,
    batch_size: int = DEFAULT_SAMPLES,
) -> np.ndarray:
    """Eval-mode gate matrix [N x C] for ``samples`` randomly chosen inputs."""
    if model.transfer is None:
        raise ValueError(f"model variant '{model.variant}' has no transfer module with gates")
    n = min(samples, len(dataset))
    if n < 1:
        raise DatasetError("cannot collect gates from an empty selection")
    chosen = rng.permutation(len(dataset))[:n]
    rows = []
    for start in range(0, n, batch_size):
        idx = chosen[start : start + batch_size]
        x = Tensor.wrap(dataset.inputs.array[idx])
        model.forward(x, Mode.EVAL, compute_aux=False)
        rows.append(model.transfer.last_gate.numpy())
    gates = np.concatenate(rows, axis=0)
    logger.debug("Collected %d x %d gates", *gates.shape)
    return gates


def _check_range(gates: np.ndarray) -> np.ndarray:
    gates = np.asarray(gates, dtype=np.float64)
    if gates.ndim != 2:
        raise DimensionError(f"gate matrix must be [N x C], got shape {gates.shape}")
    if gates.size and (gates.min() < 0.0 or gates.max() > 1.0):
        raise GateRangeError(
            f"gates must lie in [0, 1], got range [{gates.min():.6g}, {gates.max():.6g}]"
        )
    return gates


def histogram_gates(gates: np.ndarray) -> np.ndarray:
    """Ten bin counts; bin i covers [i/10, (i+1)/10) and the last bin is closed at 1."""
    gates = _check_range(gates)
    bins = np.searchsorted(_INNER_EDGES, gates.ravel(), side="right")
    return np.bincount(bins, minlength=NUM_BINS).astype(np.int64)


def feature_stats(gates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean and population standard deviation."""
    gates = np.asarray(gates, dtype=np.float64)
    if gates.ndim != 2 or gates.shape[0] < 2:
        raise DimensionError(f"feature_stats needs at least 2 rows, got shape {gates.shape}")
    mean = gates.mean(axis=0)
    return mean, np.sqrt(((gates - mean) ** 2).mean(axis=0))


def sparsity(gates: np.ndarray, threshold: float = 0.5) -> float:
    """Fraction of gate entries strictly below ``threshold``."""
    gates = np.asarray(gates, dtype=np.float64)
    if gates.size == 0:
        raise DimensionError("sparsity of an empty gate matrix")
    return float(np.count_nonzero(gates < threshold) / gates.size)


def classifier_weight_stats(model: GtnModel) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population std of |W| over the main head's classes."""
    weights = np.abs(model.main_head.weight.data)
    mean = weights.mean(axis=0)
    return mean, np.sqrt(((weights - mean) ** 2).mean(axis=0))
