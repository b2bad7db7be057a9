from __future__ import annotations

from typing import Any

import numpy as np

from gtn.errors import DimensionError
from gtn.layers.base import Layer, Mode, Parameter
from gtn.tensor import Tensor


class BatchNorm1dLayer(Layer):
    """Batch normalization over [B x C] inputs.

    Train mode normalizes with biased batch statistics and moves the running
    buffers toward (mean, unbiased variance) by ``momentum``; eval mode is the
    fixed affine map given by the running buffers.
    """

    kind = "batchnorm1d"

    def __init__(
        self,
        num_features: int,
        *,
        momentum: float = 0.1,
        epsilon: float = 1e-5,
        name: str | None = None,
    ) -> None:
        super().__init__(name)
        self.num_features = num_features
        self.momentum = momentum
        self.epsilon = epsilon
        self.gamma = Parameter("gamma", np.ones(num_features))
        self.beta = Parameter("beta", np.zeros(num_features))
        self.running_mean = Parameter("running_mean", np.zeros(num_features), trainable=False)
        self.running_var = Parameter("running_var", np.ones(num_features), trainable=False)

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        self._expect(x, 2, self.num_features)
        z = x.array
        if mode is Mode.TRAIN:
            n = z.shape[0]
            if n < 2:
                raise DimensionError(f"{self.name}: train mode needs at least 2 samples per batch")
            mean = z.mean(axis=0)
            var = z.var(axis=0)
            m = self.momentum
            self.running_mean.data[...] = (1.0 - m) * self.running_mean.data + m * mean
            self.running_var.data[...] = (1.0 - m) * self.running_var.data + m * var * n / (n - 1)
        else:
            mean = self.running_mean.data
            var = self.running_var.data
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (z - mean) * inv_std
        self._save((mode, xhat, inv_std))
        return self._output(self.gamma.data * xhat + self.beta.data)

    def backward(self, grad_output: Tensor) -> Tensor:
        mode, xhat, inv_std = self._pop()
        self._expect_grad(grad_output, xhat.shape)
        g = grad_output.array
        self.gamma.grad += (g * xhat).sum(axis=0)
        self.beta.grad += g.sum(axis=0)
        dxhat = g * self.gamma.data
        if mode is Mode.EVAL:
            return self._output(dxhat * inv_std)
        n = g.shape[0]
        dx = (inv_std / n) * (
            n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
        )
        return self._output(dx)

    def parameters(self) -> list[Parameter]:
        return [self.gamma, self.beta]

    def buffers(self) -> list[Parameter]:
        return [self.running_mean, self.running_var]

    def hyperparameters(self) -> dict[str, Any]:
        return {
            "num_features": self.num_features,
            "momentum": self.momentum,
            "epsilon": self.epsilon,
        }
