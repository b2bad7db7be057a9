"""Feature-gating transfer module.

The gate network is ``fc1 -> ReLU -> dropout(p1) -> fc2 -> sigmoid -> dropout(p2)``
applied to a pooled feature vector x of width C; the gated variant returns
``gate * x`` and the residual variant ``gate + x``. The identity and
fixed-feature variants have no parameters and return their input unchanged.
"""
from __future__ import annotations

import csv
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from gtn.errors import DimensionError, LayerStateError
from gtn.layers.activations import ReLU, Sigmoid
from gtn.layers.base import Layer, Mode, Parameter, Sequential
from gtn.layers.dropout import DropoutLayer
from gtn.layers.linear import LinearLayer
from gtn.tensor import Rng, Tensor

logger = logging.getLogger(__name__)

DEFAULT_REDUCTION = 16
DEFAULT_P1 = 0.5
DEFAULT_P2 = 0.7


class GateVariant(str, Enum):
    GATED = "gated"
    RESIDUAL = "residual"
    IDENTITY = "identity"
    FIXED_FEATURE = "fixed_feature"

    @property
    def has_parameters(self) -> bool:
        return self in (GateVariant.GATED, GateVariant.RESIDUAL)

    @property
    def freezes_backbone(self) -> bool:
        return self is GateVariant.FIXED_FEATURE


def hidden_width(channels: int, reduction: int) -> int:
    if channels <= 0 or reduction <= 0:
        raise ValueError(
            f"channels and reduction must be positive, got C={channels}, r={reduction}"
        )
    return max(1, math.ceil(channels / reduction))


def param_count(channels: int, reduction: int, bias: bool = True) -> int:
    """Closed-form size of the gate network: 2*C*h (+ h + C with biases)."""
    h = hidden_width(channels, reduction)
    return 2 * channels * h + ((h + channels) if bias else 0)


class TransferModule(Layer):
    kind = "transfer"

    def __init__(
        self,
        channels: int,
        *,
        reduction: int = DEFAULT_REDUCTION,
        p1: float = DEFAULT_P1,
        p2: float = DEFAULT_P2,
        bias: bool = True,
        variant: GateVariant | str = GateVariant.GATED,
        residual_sigmoid: bool = True,
        rng: Rng | None = None,
        name: str = "transfer",
    ) -> None:
        super().__init__(name)
        self.channels = channels
        self.reduction = reduction
        self.hidden = hidden_width(channels, reduction)
        self.p1 = p1
        self.p2 = p2
        self.bias = bias
        self.variant = GateVariant(variant)
        self.residual_sigmoid = residual_sigmoid
        self.last_gate: Tensor | None = None
        self.gate_net: Sequential | None = None
        if self.variant.has_parameters:
            self.gate_net = self._build_gate_net(rng)

    def _build_gate_net(self, rng: Rng | None) -> Sequential:
        init = rng.split("init") if rng is not None else None
        layers: list[Layer] = [
            LinearLayer(self.channels, self.hidden, bias=self.bias, rng=init, name="fc1"),
            ReLU(name="relu"),
            DropoutLayer(self.p1, rng.split("drop1") if rng else None, name="drop1"),
            LinearLayer(self.hidden, self.channels, bias=self.bias, rng=init, name="fc2"),
        ]
        if self.variant is GateVariant.GATED or self.residual_sigmoid:
            layers.append(Sigmoid(name="sigmoid"))
        layers.append(DropoutLayer(self.p2, rng.split("drop2") if rng else None, name="drop2"))
        return Sequential(layers, name=self.name)

    # ── Forward / backward ────────────────────────────────────────────────

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        self._expect(x, 2, self.channels)
        if self.gate_net is None:
            self.last_gate = Tensor.ones(x.shape)
            self._save(("bypass", None, None))
            return x
        gate = self.gate_net.forward(x, mode)
        self.last_gate = gate
        if self.variant is GateVariant.GATED:
            y = x.array * gate.array
        else:
            y = x.array + gate.array
        self._save((self.variant.value, x.array, gate.array))
        return self._output(y)

    def backward(self, grad_output: Tensor) -> Tensor:
        kind, x, gate = self._pop()
        if kind == "bypass":
            return grad_output
        self._expect_grad(grad_output, x.shape)
        dy = grad_output.array
        if kind == GateVariant.GATED.value:
            through_gate = self.gate_net.backward(Tensor.wrap(x * dy, self.name))
            return self._output(gate * dy + through_gate.array)
        through_gate = self.gate_net.backward(grad_output)
        return self._output(dy + through_gate.array)

    def gate_forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> tuple[Tensor, Tensor]:
        """Return (output, gate); the gate is all ones for parameter-free variants."""
        y = self.forward(x, mode)
        return y, self.last_gate

    def gate_backward(self, grad_output: Tensor) -> Tensor:
        return self.backward(grad_output)

    def residual_forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        if self.variant is not GateVariant.RESIDUAL:
            raise LayerStateError(f"{self.name}: residual_forward on a {self.variant.value} module")
        return self.forward(x, mode)

    # ── Introspection ─────────────────────────────────────────────────────

    @property
    def fc1(self) -> LinearLayer | None:
        return self.gate_net.layers[0] if self.gate_net else None

    @property
    def fc2(self) -> LinearLayer | None:
        return self.gate_net.layers[3] if self.gate_net else None

    def parameters(self) -> list[Parameter]:
        return self.gate_net.parameters() if self.gate_net else []

    def named_leaves(self, prefix: str = ""):
        if self.gate_net is not None:
            yield from self.gate_net.named_leaves(prefix)

    def walk(self):
        yield self
        if self.gate_net is not None:
            yield from self.gate_net.walk()

    def hyperparameters(self) -> dict[str, Any]:
        return {
            "channels": self.channels,
            "reduction": self.reduction,
            "hidden": self.hidden,
            "p1": self.p1,
            "p2": self.p2,
            "bias": self.bias,
            "variant": self.variant.value,
            "residual_sigmoid": self.residual_sigmoid,
        }


def export_gates_csv(gate: Tensor | np.ndarray, path: str | Path) -> Path:
    """Write a [N x C] gate matrix as CSV: one row per sample, one column per channel."""
    values = np.asarray(gate, dtype=np.float64)
    if values.ndim != 2:
        raise DimensionError(f"gate matrix must be [N x C], got shape {values.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow([f"c{j}" for j in range(values.shape[1])])
        for row in values:
            writer.writerow([repr(float(v)) for v in row])
    logger.debug("Wrote %d gate rows to %s", values.shape[0], path)
    return path
