from __future__ import annotations

from typing import Any

import numpy as np

from gtn.errors import LayerStateError
from gtn.layers.base import Layer, Mode
from gtn.tensor import Rng, Tensor


class DropoutLayer(Layer):
    """Inverted dropout.

    Train mode keeps each element with probability 1 - p and scales survivors
    by 1 / (1 - p); eval mode (and p == 0) returns the input tensor itself.
    ``freeze_mask()`` makes train-mode forwards reuse the last sampled mask,
    which gradient checks need.
    """

    kind = "dropout"

    def __init__(self, p: float, rng: Rng | None = None, name: str | None = None) -> None:
        super().__init__(name)
        if not 0.0 <= p < 1.0:
            raise ValueError(f"{self.name}: dropout rate must be in [0, 1), got {p}")
        self.p = float(p)
        self.rng = rng
        self.mask: np.ndarray | None = None
        self.frozen = False

    def freeze_mask(self, frozen: bool = True) -> None:
        self.frozen = frozen

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        if mode is Mode.EVAL or self.p == 0.0:
            self._save(False)
            return x
        reuse = self.frozen and self.mask is not None and self.mask.shape == x.shape
        if not reuse:
            if self.rng is None:
                raise LayerStateError(f"{self.name}: train-mode dropout needs a random stream")
            keep = 1.0 - self.p
            self.mask = self.rng.bernoulli(x.shape, keep) / keep
        self._save(self.mask)
        return self._output(x.array * self.mask)

    def backward(self, grad_output: Tensor) -> Tensor:
        mask = self._pop()
        if mask is False:
            return grad_output
        self._expect_grad(grad_output, mask.shape)
        return self._output(grad_output.array * mask)

    def hyperparameters(self) -> dict[str, Any]:
        return {"p": self.p}
