"""Immutable float64 tensor value type."""
from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Any

import numpy as np

from gtn.errors import DimensionError, NonFiniteError

DTYPE = np.float64


def check_finite(array: np.ndarray, where: str) -> np.ndarray:
    """Raise NonFiniteError if ``array`` holds NaN or Inf; return it unchanged otherwise."""
    finite = np.isfinite(array)
    if not finite.all():
        bad = int(finite.size - np.count_nonzero(finite))
        raise NonFiniteError(where, f"{bad} of {finite.size} entries are NaN/Inf")
    return array


def _validate_shape(shape: tuple[int, ...]) -> None:
    if len(shape) == 0:
        raise DimensionError("tensors must have rank >= 1")
    if any(dim <= 0 for dim in shape):
        raise DimensionError(f"all dimensions must be positive, got {shape}")


def _as_shape(shape: int | Sequence[int]) -> tuple[int, ...]:
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(dim) for dim in shape)


class Tensor:
    """Dense row-major array of 64-bit floats.

    The backing array is read-only; every operation returns a new tensor.
    Construction validates the shape (positive dimensions) and rejects
    non-finite values.
    """

    __slots__ = ("_array",)

    def __init__(self, data: Any, shape: int | Sequence[int] | None = None) -> None:
        array = np.array(data, dtype=DTYPE)
        if array.ndim == 0:
            array = array.reshape(1)
        if shape is not None:
            target = _as_shape(shape)
            if math.prod(target) != array.size:
                raise DimensionError(
                    f"shape {target} needs {math.prod(target)} values, got {array.size}"
                )
            array = array.reshape(target)
        self._array = _freeze(array, "Tensor()")

    @classmethod
    def wrap(cls, array: np.ndarray, where: str = "tensor op") -> Tensor:
        """Adopt an array produced by an internal computation without copying it."""
        obj = cls.__new__(cls)
        obj._array = _freeze(np.ascontiguousarray(array, dtype=DTYPE), where)
        return obj

    @classmethod
    def zeros(cls, shape: int | Sequence[int]) -> Tensor:
        return cls.wrap(np.zeros(_as_shape(shape), dtype=DTYPE))

    @classmethod
    def ones(cls, shape: int | Sequence[int]) -> Tensor:
        return cls.wrap(np.ones(_as_shape(shape), dtype=DTYPE))

    @classmethod
    def full(cls, shape: int | Sequence[int], value: float) -> Tensor:
        return cls.wrap(np.full(_as_shape(shape), float(value), dtype=DTYPE))

    @classmethod
    def eye(cls, n: int) -> Tensor:
        return cls.wrap(np.eye(n, dtype=DTYPE))

    # ── Accessors ─────────────────────────────────────────────────────────

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def ndim(self) -> int:
        return self._array.ndim

    @property
    def size(self) -> int:
        return self._array.size

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the backing array."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Flat row-major read-only view."""
        return self._array.reshape(-1)

    def numpy(self) -> np.ndarray:
        """Writable copy of the values."""
        return self._array.copy()

    def tolist(self) -> list:
        return self._array.tolist()

    def item(self) -> float:
        if self.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self._array.reshape(-1)[0])

    def flat_index(self, coord: Sequence[int]) -> int:
        if len(coord) != self.ndim:
            raise DimensionError(f"coordinate {tuple(coord)} has wrong rank for shape {self.shape}")
        for axis, (i, dim) in enumerate(zip(coord, self.shape, strict=True)):
            if not 0 <= i < dim:
                raise IndexError(f"index {i} out of range for axis {axis} of size {dim}")
        return int(np.ravel_multi_index(tuple(coord), self.shape))

    def unravel(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise IndexError(f"flat index {index} out of range for size {self.size}")
        return tuple(int(i) for i in np.unravel_index(index, self.shape))

    # ── Shape ops ─────────────────────────────────────────────────────────

    def reshape(self, *shape: int) -> Tensor:
        target = _as_shape(shape[0] if len(shape) == 1 and not isinstance(shape[0], int) else shape)
        if math.prod(target) != self.size:
            raise DimensionError(f"cannot reshape {self.shape} into {target}")
        return Tensor.wrap(self._array.reshape(target))

    @property
    def T(self) -> Tensor:  # noqa: N802
        if self.ndim != 2:
            raise DimensionError(f"transpose needs a rank-2 tensor, got shape {self.shape}")
        return Tensor.wrap(self._array.T)

    # ── Operators ─────────────────────────────────────────────────────────

    def __add__(self, other: Tensor) -> Tensor:
        from gtn.tensor.ops import add

        return add(self, other)

    def __sub__(self, other: Tensor) -> Tensor:
        from gtn.tensor.ops import sub

        return sub(self, other)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from gtn.tensor.ops import mul, scale

        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __matmul__(self, other: Tensor) -> Tensor:
        from gtn.tensor.ops import matmul

        return matmul(self, other)

    def __len__(self) -> int:
        return self.shape[0]

    def __array__(self, dtype: Any = None, copy: bool | None = None) -> np.ndarray:
        if dtype is None or np.dtype(dtype) == DTYPE:
            return self._array.copy() if copy else self._array
        return self._array.astype(dtype)

    def __repr__(self) -> str:
        body = np.array2string(self._array, precision=6, threshold=20)
        return f"Tensor(shape={self.shape}, data={body})"


def _freeze(array: np.ndarray, where: str) -> np.ndarray:
    _validate_shape(array.shape)
    check_finite(array, where)
    if not array.flags.c_contiguous:
        array = np.ascontiguousarray(array)
    # read-only view; the caller's array keeps its own flags
    view = array.view()
    view.flags.writeable = False
    return view


def equal(a: Tensor, b: Tensor) -> bool:
    """Bit-exact equality: same shape and identical IEEE-754 payload."""
    return a.shape == b.shape and a.array.tobytes() == b.array.tobytes()
