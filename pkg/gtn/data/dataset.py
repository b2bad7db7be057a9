from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from gtn.errors import DatasetError
from gtn.layers.loss import validate_labels
from gtn.tensor import Rng, Tensor

DEFAULT_FRACTIONS = (0.70, 0.15, 0.15)


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Inputs [N x ...] with integer labels in [0, num_classes)."""

    inputs: Tensor
    labels: np.ndarray
    num_classes: int
    split: Split = Split.TRAIN
    name: str = ""

    def __post_init__(self) -> None:
        if self.num_classes < 1:
            raise DatasetError(f"dataset '{self.name}': num_classes must be >= 1")
        labels = validate_labels(np.asarray(self.labels), self.inputs.shape[0], self.num_classes)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "split", Split(self.split))

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_shape(self) -> tuple[int, ...]:
        return self.inputs.shape[1:]

    def class_counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.num_classes).tolist()

    def subset(self, indices: Sequence[int] | np.ndarray, split: Split | None = None) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            raise DatasetError(f"dataset '{self.name}': empty subset")
        return Dataset(
            Tensor.wrap(self.inputs.array[idx]),
            self.labels[idx],
            self.num_classes,
            split or self.split,
            self.name,
        )

    def head(self, n: int) -> Dataset:
        return self.subset(np.arange(min(n, len(self))))

    def batches(
        self, batch_size: int, rng: Rng | None = None, *, min_batch: int = 1
    ) -> Iterator[tuple[Tensor, np.ndarray]]:
        """Yield (inputs, labels) mini-batches; shuffled by Fisher-Yates when ``rng`` is given.

        A trailing batch smaller than ``min_batch`` is dropped.
        """
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        n = len(self)
        order = rng.permutation(n) if rng is not None else np.arange(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            if idx.size < min_batch:
                break
            yield Tensor.wrap(self.inputs.array[idx]), self.labels[idx]

    def summary(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "split": self.split.value,
            "count": len(self),
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
            "class_counts": self.class_counts(),
        }


@dataclass(frozen=True, eq=False)
class DatasetSplits:
    train: Dataset
    val: Dataset
    test: Dataset
    provenance: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, split: Split | str) -> Dataset:
        return getattr(self, Split(split).value)

    def __iter__(self) -> Iterator[Dataset]:
        yield from (self.train, self.val, self.test)

    @property
    def num_classes(self) -> int:
        return self.train.num_classes

    @property
    def input_shape(self) -> tuple[int, ...]:
        return self.train.input_shape


def split_indices(
    labels: np.ndarray, num_classes: int, rng: Rng, fractions: Sequence[float] = DEFAULT_FRACTIONS
) -> dict[Split, np.ndarray]:
    """Stratified split: each class is shuffled and cut by ``fractions``.

    The three index sets are disjoint and together cover every sample.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise DatasetError(
            f"split fractions must be three non-negative numbers summing to 1, got {fractions}"
        )
    parts: dict[Split, list[np.ndarray]] = {s: [] for s in Split}
    for c in range(num_classes):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        n_train = int(round(fractions[0] * members.size))
        n_val = int(round(fractions[1] * members.size))
        parts[Split.TRAIN].append(members[:n_train])
        parts[Split.VAL].append(members[n_train : n_train + n_val])
        parts[Split.TEST].append(members[n_train + n_val :])
    return {s: np.sort(np.concatenate(p)).astype(np.int64) for s, p in parts.items()}


def split_dataset(
    inputs: Tensor,
    labels: np.ndarray,
    num_classes: int,
    rng: Rng,
    *,
    name: str = "",
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    provenance: dict[str, Any] | None = None,
) -> DatasetSplits:
    full = Dataset(inputs, labels, num_classes, Split.TRAIN, name)
    index = split_indices(full.labels, num_classes, rng, fractions)
    for split, idx in index.items():
        if idx.size == 0:
            raise DatasetError(f"dataset '{name}': the {split.value} split is empty")
    meta = dict(provenance or {})
    meta["split_indices"] = {s.value: idx.tolist() for s, idx in index.items()}
    return DatasetSplits(
        train=full.subset(index[Split.TRAIN], Split.TRAIN),
        val=full.subset(index[Split.VAL], Split.VAL),
        test=full.subset(index[Split.TEST], Split.TEST),
        provenance=meta,
    )
