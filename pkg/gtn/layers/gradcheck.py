"""Central finite-difference verification of hand-derived gradients."""
from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from typing import Protocol

import numpy as np

from gtn.errors import NonFiniteError
from gtn.layers.base import Layer, Mode, Parameter
from gtn.layers.dropout import DropoutLayer
from gtn.tensor import Rng, Tensor

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
_FLOOR = 1e-8


class Differentiable(Protocol):
    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor: ...

    def backward(self, grad_output: Tensor) -> Tensor: ...

    def parameters(self) -> list[Parameter]: ...

    def zero_grad(self) -> None: ...

    def walk(self) -> Iterator[Layer]: ...


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), _FLOOR)


def grad_check(
    target: Differentiable,
    input_shape: Sequence[int],
    rng: Rng,
    *,
    mode: Mode = Mode.EVAL,
    step: float = DEFAULT_STEP,
    inputs: Tensor | None = None,
    check_inputs: bool = True,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The scalar objective is ``sum(forward(x) * R)`` for a fixed random
    projection R, so dL/dy = R. Every trainable parameter entry and (when
    ``check_inputs``) every input entry is perturbed by +/- ``step``. In train
    mode dropout masks are frozen for the duration of the check.
    """
    for param in target.parameters():
        if not np.isfinite(param.data).all():
            raise NonFiniteError(f"parameter '{param.name}'", "grad_check needs finite parameters")

    x = inputs if inputs is not None else Tensor.wrap(rng.normal(tuple(input_shape)), "grad_check")
    dropouts = [layer for layer in target.walk() if isinstance(layer, DropoutLayer)]
    for layer in dropouts:
        layer.freeze_mask(True)
    try:
        return _check(target, x, rng, mode, step, check_inputs)
    finally:
        for layer in dropouts:
            layer.freeze_mask(False)


def _check(
    target: Differentiable, x: Tensor, rng: Rng, mode: Mode, step: float, check_inputs: bool
) -> float:
    out = target.forward(x, mode)
    projection = rng.normal(out.shape)
    target.zero_grad()
    dx = target.backward(Tensor.wrap(projection))
    analytic = {id(p): p.grad.copy() for p in target.parameters()}

    def objective(inp: Tensor) -> float:
        return float(np.sum(target.forward(inp, mode).array * projection))

    worst = 0.0
    for param in target.parameters():
        grads = analytic[id(param)]
        flat = param.data.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            plus = objective(x)
            flat[i] = original - step
            minus = objective(x)
            flat[i] = original
            numeric = (plus - minus) / (2.0 * step)
            worst = max(worst, relative_error(float(grads.reshape(-1)[i]), numeric))

    if check_inputs:
        base = x.numpy().reshape(-1)
        for i in range(base.size):
            original = base[i]
            base[i] = original + step
            plus = objective(Tensor.wrap(base.reshape(x.shape)))
            base[i] = original - step
            minus = objective(Tensor.wrap(base.reshape(x.shape)))
            base[i] = original
            numeric = (plus - minus) / (2.0 * step)
            worst = max(worst, relative_error(float(dx.data[i]), numeric))

    target.zero_grad()
    logger.debug("grad_check max relative error %.3e", worst)
    return worst
