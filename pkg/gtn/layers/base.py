from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar

import numpy as np

from gtn.errors import DimensionError, LayerStateError
from gtn.tensor import Tensor


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass(eq=False)
class Parameter:
    """A mutable parameter tensor plus its accumulated gradient.

    ``trainable=False`` marks buffers (batch-norm running statistics) that are
    checkpointed but never touched by the optimizer.
    """

    name: str
    data: np.ndarray
    trainable: bool = True
    grad: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.data = np.array(self.data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def tensor(self) -> Tensor:
        return Tensor(self.data)


class Layer(ABC):
    """Forward/backward unit with a hand-derived gradient.

    ``forward`` caches what ``backward`` needs; ``backward`` consumes the cache,
    accumulates parameter gradients and returns dL/dx. Calling ``backward``
    without a matching ``forward`` raises LayerStateError.
    """

    kind: ClassVar[str] = "layer"

    def __init__(self, name: str | None = None) -> None:
        self.name = name or self.kind
        self._cache: Any = None

    @abstractmethod
    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        """Compute the layer output and cache backward state."""

    @abstractmethod
    def backward(self, grad_output: Tensor) -> Tensor:
        """Return dL/dx and accumulate parameter gradients."""

    def parameters(self) -> list[Parameter]:
        return []

    def buffers(self) -> list[Parameter]:
        return []

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def hyperparameters(self) -> dict[str, Any]:
        return {}

    def named_leaves(self, prefix: str = "") -> Iterator[tuple[str, Layer]]:
        yield f"{prefix}{self.name}", self

    def walk(self) -> Iterator[Layer]:
        yield self

    # ── Helpers for subclasses ────────────────────────────────────────────

    def _save(self, cache: Any) -> None:
        self._cache = cache

    def _pop(self) -> Any:
        if self._cache is None:
            raise LayerStateError(f"{self.name}: backward called before forward")
        cache, self._cache = self._cache, None
        return cache

    def _expect(self, x: Tensor, rank: int, last_dim: int | None = None) -> None:
        if x.ndim != rank:
            raise DimensionError(f"{self.name}: expected rank-{rank} input, got shape {x.shape}")
        if last_dim is not None and x.shape[-1] != last_dim:
            raise DimensionError(
                f"{self.name}: expected last dimension {last_dim}, got shape {x.shape}"
            )

    def _expect_grad(self, grad: Tensor, shape: tuple[int, ...]) -> None:
        if grad.shape != shape:
            raise DimensionError(
                f"{self.name}: gradient shape {grad.shape} != output shape {shape}"
            )

    def _output(self, array: np.ndarray) -> Tensor:
        return Tensor.wrap(array, f"layer '{self.name}'")

    def __repr__(self) -> str:
        hp = ", ".join(f"{k}={v}" for k, v in self.hyperparameters().items())
        return f"{type(self).__name__}(name={self.name!r}{', ' + hp if hp else ''})"


class Sequential(Layer):
    kind = "sequential"

    def __init__(self, layers: list[Layer], name: str | None = None) -> None:
        super().__init__(name)
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ValueError(f"{self.name}: child layer names must be unique, got {names}")
        self.layers = list(layers)

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        for layer in self.layers:
            x = layer.forward(x, mode)
        return x

    def backward(self, grad_output: Tensor) -> Tensor:
        for layer in reversed(self.layers):
            grad_output = layer.backward(grad_output)
        return grad_output

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]

    def buffers(self) -> list[Parameter]:
        return [b for layer in self.layers for b in layer.buffers()]

    def named_leaves(self, prefix: str = "") -> Iterator[tuple[str, Layer]]:
        for layer in self.layers:
            yield from layer.named_leaves(f"{prefix}{self.name}.")

    def walk(self) -> Iterator[Layer]:
        yield self
        for layer in self.layers:
            yield from layer.walk()
