"""Deterministic dense-array numerics."""
from gtn.tensor.core import Tensor, check_finite, equal
from gtn.tensor.ops import (
    ElementwiseOp,
    add,
    concat_rows,
    elementwise,
    expand_rows,
    matmul,
    mean_axis,
    mul,
    relu,
    scale,
    sigmoid,
    sub,
    sum_rows,
    take_rows,
)
from gtn.tensor.rng import Rng, rand_normal, rand_uniform

__all__ = [
    "ElementwiseOp",
    "Rng",
    "Tensor",
    "add",
    "check_finite",
    "concat_rows",
    "elementwise",
    "equal",
    "expand_rows",
    "matmul",
    "mean_axis",
    "mul",
    "rand_normal",
    "rand_uniform",
    "relu",
    "scale",
    "sigmoid",
    "sub",
    "sum_rows",
    "take_rows",
]
