"""Pure tensor operations.

No implicit broadcasting: binary operations require identical shapes, and
shape adaptation goes through the explicit helpers at the bottom of this
module. Every result is checked for NaN/Inf.
"""
from __future__ import annotations

from collections.abc import Sequence
from enum import Enum

import numpy as np

from gtn.errors import DimensionError
from gtn.tensor.core import Tensor


class ElementwiseOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    SIGMOID = "sigmoid"
    RELU = "relu"


_BINARY = {
    ElementwiseOp.ADD: np.add,
    ElementwiseOp.SUB: np.subtract,
    ElementwiseOp.MUL: np.multiply,
}


def matmul_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with a fixed summation order.

    Entry (i, j) is accumulated left to right over the shared index,
    starting from the l = 0 product: ``((a[i,0]*b[0,j] + a[i,1]*b[1,j]) + ...)``.
    Multiplication and addition are separate rounding steps (no fused
    multiply-add), so the result equals a naive triple loop bit for bit.
    """
    k = a.shape[1]
    columns = np.ascontiguousarray(a.T)
    out = np.multiply.outer(columns[0], b[0])
    for i in range(1, k):
        out += np.multiply.outer(columns[i], b[i])
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return Tensor.wrap(matmul_arrays(a.array, b.array), "matmul")


def sigmoid_array(z: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(-z)), evaluated without overflow for large |z|."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def relu_array(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, z, 0.0)


_UNARY = {
    ElementwiseOp.SIGMOID: sigmoid_array,
    ElementwiseOp.RELU: relu_array,
}


def elementwise(op: ElementwiseOp | str, a: Tensor, b: Tensor | None = None) -> Tensor:
    op = ElementwiseOp(op)
    if op in _BINARY:
        if b is None:
            raise DimensionError(f"{op.value} needs two operands")
        if a.shape != b.shape:
            raise DimensionError(f"{op.value}: shape mismatch {a.shape} vs {b.shape}")
        return Tensor.wrap(_BINARY[op](a.array, b.array), op.value)
    if b is not None:
        raise DimensionError(f"{op.value} takes a single operand")
    return Tensor.wrap(_UNARY[op](a.array), op.value)


def add(a: Tensor, b: Tensor) -> Tensor:
    return elementwise(ElementwiseOp.ADD, a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return elementwise(ElementwiseOp.SUB, a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return elementwise(ElementwiseOp.MUL, a, b)


def sigmoid(a: Tensor) -> Tensor:
    return elementwise(ElementwiseOp.SIGMOID, a)


def relu(a: Tensor) -> Tensor:
    return elementwise(ElementwiseOp.RELU, a)


def scale(a: Tensor, factor: float) -> Tensor:
    return Tensor.wrap(a.array * float(factor), "scale")


# ── Explicit shape adaptation ─────────────────────────────────────────────


def expand_rows(v: Tensor, rows: int) -> Tensor:
    """Repeat a rank-1 tensor ``rows`` times into a [rows x n] tensor."""
    if v.ndim != 1:
        raise DimensionError(f"expand_rows needs a rank-1 tensor, got shape {v.shape}")
    return Tensor.wrap(np.repeat(v.array[None, :], rows, axis=0))


def sum_rows(a: Tensor) -> Tensor:
    """Column sums of a rank-2 tensor, accumulated top to bottom."""
    if a.ndim != 2:
        raise DimensionError(f"sum_rows needs a rank-2 tensor, got shape {a.shape}")
    out = a.array[0].copy()
    for row in a.array[1:]:
        out += row
    return Tensor.wrap(out, "sum_rows")


def mean_axis(a: Tensor, axis: int | Sequence[int]) -> Tensor:
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    for ax in axes:
        if not -a.ndim <= ax < a.ndim:
            raise DimensionError(f"axis {ax} out of range for shape {a.shape}")
    return Tensor.wrap(a.array.mean(axis=axes), "mean")


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise DimensionError("concat_rows needs at least one tensor")
    trailing = parts[0].shape[1:]
    for part in parts:
        if part.shape[1:] != trailing:
            raise DimensionError(
                f"concat_rows: trailing shapes differ, {trailing} vs {part.shape[1:]}"
            )
    return Tensor.wrap(np.concatenate([p.array for p in parts], axis=0))


def take_rows(a: Tensor, indices: Sequence[int] | np.ndarray) -> Tensor:
    return Tensor.wrap(a.array[np.asarray(indices, dtype=np.int64)])
