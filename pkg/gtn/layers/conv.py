"""2-D convolution by patch flattening.

Patches are unrolled into rows (``im2col``) so the convolution becomes one
call to the fixed-order matrix product; ``col2im`` scatters row gradients
back onto the padded input.
"""
from __future__ import annotations

from typing import Any

import numpy as np

from gtn.errors import DimensionError
from gtn.layers.base import Layer, Mode, Parameter
from gtn.layers.linear import kaiming_uniform
from gtn.tensor import Rng, Tensor
from gtn.tensor.ops import matmul_arrays


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def im2col(
    x: np.ndarray, kh: int, kw: int, stride: int, padding: int
) -> tuple[np.ndarray, int, int]:
    """Unroll [B, C, H, W] into [B*oh*ow, C*kh*kw] patch rows (C-major within a row)."""
    b, c, h, w = x.shape
    oh = conv_output_size(h, kh, stride, padding)
    ow = conv_output_size(w, kw, stride, padding)
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    cols = np.empty((b, oh, ow, c, kh, kw))
    for i in range(kh):
        for j in range(kw):
            window = xp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
            cols[:, :, :, :, i, j] = window.transpose(0, 2, 3, 1)
    return cols.reshape(b * oh * ow, c * kh * kw), oh, ow


def col2im(
    cols: np.ndarray,
    x_shape: tuple[int, int, int, int],
    kh: int,
    kw: int,
    stride: int,
    padding: int,
    oh: int,
    ow: int,
) -> np.ndarray:
    b, c, h, w = x_shape
    dxp = np.zeros((b, c, h + 2 * padding, w + 2 * padding))
    patches = cols.reshape(b, oh, ow, c, kh, kw)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += patches[
                :, :, :, :, i, j
            ].transpose(0, 3, 1, 2)
    return dxp[:, :, padding : padding + h, padding : padding + w]


class Conv2dLayer(Layer):
    kind = "conv2d"

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int | tuple[int, int] = 3,
        *,
        stride: int = 1,
        padding: int = 0,
        bias: bool = True,
        rng: Rng | None = None,
        name: str | None = None,
    ) -> None:
        super().__init__(name)
        kh, kw = (kernel_size, kernel_size) if isinstance(kernel_size, int) else kernel_size
        if stride <= 0 or padding < 0:
            raise ValueError(f"{self.name}: stride must be positive and padding non-negative")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kh, self.kw = kh, kw
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kh * kw
        self.kernel = Parameter(
            "kernel", kaiming_uniform(rng, (out_channels, in_channels, kh, kw), fan_in)
        )
        self.bias = Parameter("bias", np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        self._expect(x, 4)
        b, c, h, w = x.shape
        if c != self.in_channels:
            raise DimensionError(
                f"{self.name}: expected {self.in_channels} channels, got shape {x.shape}"
            )
        if conv_output_size(h, self.kh, self.stride, self.padding) < 1 or conv_output_size(
            w, self.kw, self.stride, self.padding
        ) < 1:
            raise DimensionError(f"{self.name}: input {x.shape} is smaller than the kernel")
        cols, oh, ow = im2col(x.array, self.kh, self.kw, self.stride, self.padding)
        weights = self.kernel.data.reshape(self.out_channels, -1)
        out = matmul_arrays(cols, weights.T)
        if self.bias is not None:
            out += self.bias.data
        self._save((cols, x.shape, oh, ow))
        return self._output(out.reshape(b, oh, ow, self.out_channels).transpose(0, 3, 1, 2))

    def backward(self, grad_output: Tensor) -> Tensor:
        cols, x_shape, oh, ow = self._pop()
        self._expect_grad(grad_output, (x_shape[0], self.out_channels, oh, ow))
        g = grad_output.array.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        self.kernel.grad += matmul_arrays(g.T, cols).reshape(self.kernel.shape)
        if self.bias is not None:
            self.bias.grad += g.sum(axis=0)
        dcols = matmul_arrays(g, self.kernel.data.reshape(self.out_channels, -1))
        dx = col2im(dcols, x_shape, self.kh, self.kw, self.stride, self.padding, oh, ow)
        return self._output(dx)

    def parameters(self) -> list[Parameter]:
        return [self.kernel] if self.bias is None else [self.kernel, self.bias]

    def hyperparameters(self) -> dict[str, Any]:
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": [self.kh, self.kw],
            "stride": self.stride,
            "padding": self.padding,
            "bias": self.bias is not None,
        }
