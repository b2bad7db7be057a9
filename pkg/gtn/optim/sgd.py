"""SGD with momentum and coupled weight decay.

Update for every trainable parameter w with gradient g::

    g' = g + wd * w
    v  = mu * v - lr * g'
    w  = w + v

No Nesterov correction. Velocity buffers start at zero and mirror the
parameter shapes. Parameters in frozen groups are skipped entirely.
"""
from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from gtn.errors import NonFiniteError
from gtn.layers.base import Parameter

if TYPE_CHECKING:
    from gtn.model.network import GtnModel

logger = logging.getLogger(__name__)

DEFAULT_LR = 0.01
DEFAULT_MOMENTUM = 0.9
DEFAULT_WEIGHT_DECAY = 1e-4


@dataclass
class SgdState:
    lr: float = DEFAULT_LR
    momentum: float = DEFAULT_MOMENTUM
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    velocity: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.lr < 0 or self.momentum < 0 or self.weight_decay < 0:
            raise ValueError(
                f"lr, momentum and weight_decay must be >= 0, got "
                f"{self.lr}, {self.momentum}, {self.weight_decay}"
            )

    def buffer(self, param: Parameter) -> np.ndarray:
        buf = self.velocity.get(id(param))
        if buf is None:
            buf = np.zeros_like(param.data)
            self.velocity[id(param)] = buf
        return buf


def sgd_step(
    state: SgdState,
    groups: Mapping[str, Sequence[Parameter]],
    frozen: frozenset[str] | set[str] = frozenset(),
) -> None:
    """Apply one update in place to the trainable parameters of unfrozen groups."""
    for group, params in groups.items():
        if group in frozen:
            continue
        for param in params:
            if not param.trainable:
                continue
            if not np.isfinite(param.grad).all():
                raise NonFiniteError(f"gradient of {group}/{param.name}", "refusing to step")
            g = param.grad
            if state.weight_decay:
                g = g + state.weight_decay * param.data
            velocity = state.buffer(param)
            velocity *= state.momentum
            velocity -= state.lr * g
            param.data += velocity


class Sgd:
    """Optimizer bound to a model's parameter groups."""

    def __init__(self, model: GtnModel, state: SgdState | None = None) -> None:
        self.model = model
        self.state = state or SgdState()

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = value

    def zero_grad(self) -> None:
        self.model.zero_grad()

    def step(self) -> None:
        sgd_step(self.state, self.model.param_groups(), self.model.frozen)
