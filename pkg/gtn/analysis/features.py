from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from gtn.data.dataset import Dataset
from gtn.layers.base import Mode
from gtn.model.network import GtnModel

logger = logging.getLogger(__name__)


def pre_classifier_features(model: GtnModel, dataset: Dataset, batch_size: int = 256) -> np.ndarray:
    """Eval-mode inputs of the main head, in dataset order."""
    rows = [
        model.forward(x, Mode.EVAL, compute_aux=False).adapted.numpy()
        for x, _ in dataset.batches(batch_size)
    ]
    return np.concatenate(rows, axis=0)


def export_features(
    model: GtnModel, dataset: Dataset, path: str | Path, batch_size: int = 256
) -> np.ndarray:
    """Write the pre-classifier features plus a ``label`` column as CSV."""
    features = pre_classifier_features(model, dataset, batch_size)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow([f"f{c}" for c in range(features.shape[1])] + ["label"])
        for row, label in zip(features, dataset.labels, strict=True):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    logger.info("Exported %d feature rows to %s", features.shape[0], path)
    return features
