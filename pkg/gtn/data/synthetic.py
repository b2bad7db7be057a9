"""Synthetic source/target classification tasks with a tunable factor overlap.

Each task owns k = ``factors_per_task`` input dimensions. A class prototype
is a Gaussian vector supported only on its task's dimensions; samples are
``prototype + noise_std * N(0, I)`` over all D dimensions. The target task
shares ``round(overlap * k)`` dimensions with the source task, so
``overlap`` stands in for domain similarity: 1 makes the target dimensions
equal the source dimensions, 0 makes them disjoint.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, NamedTuple

import numpy as np

from gtn.data.dataset import DatasetSplits, split_dataset
from gtn.errors import DatasetError
from gtn.tensor import Rng, Tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticTransferSpec:
    input_dim: int = 64
    source_classes: int = 8
    target_classes: int = 4
    samples_per_class: int = 200
    noise_std: float = 0.5
    overlap: float = 0.3
    factors_per_task: int = 16
    prototype_scale: float = 1.0
    shared_prototypes: bool = False
    image_shape: tuple[int, int, int] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.overlap <= 1.0:
            raise DatasetError(f"overlap must be in [0, 1], got {self.overlap}")
        if self.noise_std <= 0:
            raise DatasetError(f"noise_std must be > 0, got {self.noise_std}")
        if min(self.source_classes, self.target_classes, self.samples_per_class) < 1:
            raise DatasetError("class counts and samples_per_class must be positive")
        if self.factors_per_task < 1:
            raise DatasetError("factors_per_task must be positive")
        if self.union_size > self.input_dim:
            raise DatasetError(
                f"infeasible factor sets: |S u T| = {self.union_size} "
                f"exceeds input_dim {self.input_dim}"
            )
        if self.shared_prototypes and self.target_classes > self.source_classes:
            raise DatasetError("shared_prototypes needs target_classes <= source_classes")
        if self.image_shape is not None:
            shape = tuple(int(d) for d in self.image_shape)
            if len(shape) != 3 or int(np.prod(shape)) != self.input_dim:
                raise DatasetError(f"image_shape {shape} does not hold {self.input_dim} values")
            object.__setattr__(self, "image_shape", shape)

    @property
    def shared_count(self) -> int:
        return int(round(self.overlap * self.factors_per_task))

    @property
    def union_size(self) -> int:
        return 2 * self.factors_per_task - self.shared_count

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["image_shape"] = list(self.image_shape) if self.image_shape else None
        return data


@dataclass(frozen=True)
class FactorLayout:
    source_dims: tuple[int, ...]
    target_dims: tuple[int, ...]

    @property
    def shared_dims(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.source_dims) & set(self.target_dims)))

    @property
    def overlap(self) -> float:
        return len(self.shared_dims) / len(self.target_dims)

    def complement(self, dims: tuple[int, ...], input_dim: int) -> tuple[int, ...]:
        chosen = set(dims)
        return tuple(d for d in range(input_dim) if d not in chosen)

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_dims": list(self.source_dims),
            "target_dims": list(self.target_dims),
            "shared_dims": list(self.shared_dims),
            "overlap": self.overlap,
        }


class SyntheticTask(NamedTuple):
    source: DatasetSplits
    target: DatasetSplits
    layout: FactorLayout


def factor_layout(spec: SyntheticTransferSpec, rng: Rng) -> FactorLayout:
    k, m = spec.factors_per_task, spec.shared_count
    perm = rng.permutation(spec.input_dim)
    source = perm[:k]
    target = np.concatenate([source[:m], perm[k : k + (k - m)]])
    return FactorLayout(tuple(int(d) for d in source), tuple(int(d) for d in target))


def _prototypes(
    rng: Rng, spec: SyntheticTransferSpec, dims: tuple[int, ...], num_classes: int
) -> np.ndarray:
    protos = np.zeros((num_classes, spec.input_dim))
    protos[:, list(dims)] = spec.prototype_scale * rng.normal((num_classes, len(dims)))
    return protos


def _sample(
    rng: Rng, spec: SyntheticTransferSpec, prototypes: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    num_classes = prototypes.shape[0]
    n = spec.samples_per_class
    labels = np.repeat(np.arange(num_classes), n)
    x = prototypes[labels] + spec.noise_std * rng.normal((labels.size, spec.input_dim))
    if spec.image_shape is not None:
        x = x.reshape(labels.size, *spec.image_shape)
    return x, labels


def generate_synthetic(spec: SyntheticTransferSpec) -> SyntheticTask:
    """Build the source and target tasks; output is a pure function of ``spec``."""
    root = Rng(spec.seed)
    layout = factor_layout(spec, root.split("layout"))
    source_protos = _prototypes(
        root.split("source.prototypes"), spec, layout.source_dims, spec.source_classes
    )
    target_protos = _prototypes(
        root.split("target.prototypes"), spec, layout.target_dims, spec.target_classes
    )
    if spec.shared_prototypes:
        shared = list(layout.shared_dims)
        target_protos[:, shared] = source_protos[: spec.target_classes, shared]

    provenance = {"generator": "synthetic", "spec": spec.to_dict(), "layout": layout.to_dict()}
    tasks = []
    for task, protos, classes in (
        ("source", source_protos, spec.source_classes),
        ("target", target_protos, spec.target_classes),
    ):
        x, labels = _sample(root.split(f"{task}.samples"), spec, protos)
        tasks.append(
            split_dataset(
                Tensor.wrap(x, f"synthetic {task}"),
                labels,
                classes,
                root.split(f"{task}.split"),
                name=f"synthetic-{task}",
                provenance={**provenance, "task": task},
            )
        )
    logger.debug(
        "Generated synthetic pair: overlap=%.2f shared=%d seed=%d",
        layout.overlap,
        len(layout.shared_dims),
        spec.seed,
    )
    return SyntheticTask(tasks[0], tasks[1], layout)
