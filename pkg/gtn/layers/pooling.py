from __future__ import annotations

from typing import Any

import numpy as np

from gtn.errors import DimensionError
from gtn.layers.base import Layer, Mode
from gtn.tensor import Tensor


def global_avg_pool(x: Tensor) -> Tensor:
    """[B, C, H, W] -> [B, C], the mean over each H x W map."""
    if x.ndim != 4:
        raise DimensionError(f"global_avg_pool needs a rank-4 input, got shape {x.shape}")
    return Tensor.wrap(x.array.mean(axis=(2, 3)), "global_avg_pool")


class GlobalAvgPool(Layer):
    kind = "global_avg_pool"

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        out = global_avg_pool(x)
        self._save(x.shape)
        return out

    def backward(self, grad_output: Tensor) -> Tensor:
        b, c, h, w = self._pop()
        self._expect_grad(grad_output, (b, c))
        spread = grad_output.array[:, :, None, None] / float(h * w)
        return self._output(np.broadcast_to(spread, (b, c, h, w)))


class MaxPool2d(Layer):
    """Non-overlapping k x k max pooling; trailing rows/columns that do not
    fill a window are dropped. Ties route the gradient to the first maximum."""

    kind = "max_pool2d"

    def __init__(self, kernel_size: int = 2, name: str | None = None) -> None:
        super().__init__(name)
        self.k = kernel_size

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        self._expect(x, 4)
        b, c, h, w = x.shape
        k = self.k
        oh, ow = h // k, w // k
        if oh == 0 or ow == 0:
            raise DimensionError(f"{self.name}: input {x.shape} smaller than the {k}x{k} window")
        windows = (
            x.array[:, :, : oh * k, : ow * k]
            .reshape(b, c, oh, k, ow, k)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, oh, ow, k * k)
        )
        argmax = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
        self._save((x.shape, argmax))
        return self._output(out)

    def backward(self, grad_output: Tensor) -> Tensor:
        (b, c, h, w), argmax = self._pop()
        k = self.k
        oh, ow = h // k, w // k
        self._expect_grad(grad_output, (b, c, oh, ow))
        dwindows = np.zeros((b, c, oh, ow, k * k))
        np.put_along_axis(dwindows, argmax[..., None], grad_output.array[..., None], axis=-1)
        dx = np.zeros((b, c, h, w))
        dx[:, :, : oh * k, : ow * k] = (
            dwindows.reshape(b, c, oh, ow, k, k)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, oh * k, ow * k)
        )
        return self._output(dx)

    def hyperparameters(self) -> dict[str, Any]:
        return {"kernel_size": self.k}


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        self._save(x.shape)
        return x.reshape(x.shape[0], x.size // x.shape[0])

    def backward(self, grad_output: Tensor) -> Tensor:
        shape = self._pop()
        return grad_output.reshape(shape)
