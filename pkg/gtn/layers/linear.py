from __future__ import annotations

import math
from typing import Any

import numpy as np

from gtn.layers.base import Layer, Mode, Parameter
from gtn.tensor import Rng, Tensor
from gtn.tensor.ops import matmul_arrays


def kaiming_uniform(rng: Rng | None, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """U(-b, b) with b = sqrt(6 / fan_in); zeros when no generator is given."""
    if rng is None:
        return np.zeros(shape)
    bound = math.sqrt(6.0 / fan_in)
    return (2.0 * rng.uniform(shape) - 1.0) * bound


class LinearLayer(Layer):
    """y = x W^T + b for x of shape [B x in]."""

    kind = "linear"

    def __init__(
        self,
        in_features: int,
        out_features: int,
        *,
        bias: bool = True,
        rng: Rng | None = None,
        name: str | None = None,
    ) -> None:
        super().__init__(name)
        if in_features <= 0 or out_features <= 0:
            raise ValueError(f"{self.name}: feature sizes must be positive")
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(
            "weight", kaiming_uniform(rng, (out_features, in_features), in_features)
        )
        self.bias = Parameter("bias", np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        self._expect(x, 2, self.in_features)
        out = matmul_arrays(x.array, self.weight.data.T)
        if self.bias is not None:
            out += self.bias.data
        self._save(x.array)
        return self._output(out)

    def backward(self, grad_output: Tensor) -> Tensor:
        x = self._pop()
        self._expect_grad(grad_output, (x.shape[0], self.out_features))
        g = grad_output.array
        self.weight.grad += matmul_arrays(g.T, x)
        if self.bias is not None:
            self.bias.grad += g.sum(axis=0)
        return self._output(matmul_arrays(g, self.weight.data))

    def parameters(self) -> list[Parameter]:
        return [self.weight] if self.bias is None else [self.weight, self.bias]

    def hyperparameters(self) -> dict[str, Any]:
        return {
            "in_features": self.in_features,
            "out_features": self.out_features,
            "bias": self.bias is not None,
        }
