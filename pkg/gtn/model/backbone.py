"""Desk-scale feature extractors with an intermediate tap for the auxiliary branch."""
from __future__ import annotations

from collections.abc import Iterator
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any

from gtn.errors import DimensionError
from gtn.layers.activations import ReLU
from gtn.layers.base import Layer, Mode, Parameter, Sequential
from gtn.layers.conv import Conv2dLayer
from gtn.layers.linear import LinearLayer
from gtn.layers.pooling import GlobalAvgPool, MaxPool2d
from gtn.tensor import Rng, Tensor


class BackboneKind(str, Enum):
    MLP = "mlp"
    CNN = "cnn"


@dataclass(frozen=True)
class BackboneSpec:
    """Architecture of a backbone.

    ``input_shape`` excludes the batch axis: ``(D,)`` for the MLP and
    ``(C, H, W)`` for the CNN. ``aux_tap`` indexes the stage whose output
    feeds the auxiliary head and must precede the last stage.
    """

    kind: BackboneKind = BackboneKind.MLP
    input_shape: tuple[int, ...] = (64,)
    widths: tuple[int, ...] = (256, 128)
    channels: tuple[int, ...] = (16, 32, 64)
    aux_tap: int | None = None
    bias: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", BackboneKind(self.kind))
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        expected_rank = 1 if self.kind is BackboneKind.MLP else 3
        if len(self.input_shape) != expected_rank:
            raise DimensionError(
                f"{self.kind.value} backbone needs a rank-{expected_rank} input shape, "
                f"got {self.input_shape}"
            )
        if len(self.stage_widths) < 2:
            raise ValueError(
                "a backbone needs at least two stages so the aux tap precedes the last"
            )
        if self.aux_tap is None:
            object.__setattr__(self, "aux_tap", 0 if self.kind is BackboneKind.MLP else 1)
        if not 0 <= self.aux_tap < len(self.stage_widths) - 1:
            raise ValueError(
                f"aux_tap must index a stage before the last one, got {self.aux_tap} "
                f"for {len(self.stage_widths)} stages"
            )

    @property
    def stage_widths(self) -> tuple[int, ...]:
        return self.widths if self.kind is BackboneKind.MLP else self.channels

    @property
    def feature_dim(self) -> int:
        return self.stage_widths[-1]

    @property
    def aux_dim(self) -> int:
        return self.stage_widths[self.aux_tap]

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind.value
        data["input_shape"] = list(self.input_shape)
        data["widths"] = list(self.widths)
        data["channels"] = list(self.channels)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BackboneSpec:
        return cls(
            kind=BackboneKind(data["kind"]),
            input_shape=tuple(data["input_shape"]),
            widths=tuple(data.get("widths", (256, 128))),
            channels=tuple(data.get("channels", (16, 32, 64))),
            aux_tap=data.get("aux_tap"),
            bias=data.get("bias", True),
        )


class Backbone(Layer):
    """Stages of ``linear -> ReLU`` (MLP) or ``conv3x3 -> ReLU -> maxpool2`` (CNN).

    The CNN ends in global average pooling, so both kinds emit a [B x C]
    feature vector. ``forward`` also keeps the output of stage ``aux_tap`` in
    ``self.tapped``.
    """

    kind = "backbone"

    def __init__(self, spec: BackboneSpec, rng: Rng | None = None, name: str = "backbone") -> None:
        super().__init__(name)
        self.spec = spec
        self.stages: list[Sequential] = []
        prev = spec.input_shape[0]
        for i, width in enumerate(spec.stage_widths):
            stage_rng = rng.split(f"stage{i}") if rng is not None else None
            if spec.kind is BackboneKind.MLP:
                layers: list[Layer] = [
                    LinearLayer(prev, width, bias=spec.bias, rng=stage_rng, name="linear"),
                    ReLU(name="relu"),
                ]
            else:
                layers = [
                    Conv2dLayer(
                        prev, width, 3, padding=1, bias=spec.bias, rng=stage_rng, name="conv"
                    ),
                    ReLU(name="relu"),
                    MaxPool2d(2, name="pool"),
                ]
            self.stages.append(Sequential(layers, name=f"stage{i}"))
            prev = width
        self.pool = GlobalAvgPool(name="gap") if spec.kind is BackboneKind.CNN else None
        self.tapped: Tensor | None = None

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        if x.shape[1:] != self.spec.input_shape:
            expected = ", ".join(map(str, self.spec.input_shape))
            raise DimensionError(
                f"{self.name}: expected inputs of shape [B, {expected}], got {x.shape}"
            )
        for i, stage in enumerate(self.stages):
            x = stage.forward(x, mode)
            if i == self.spec.aux_tap:
                self.tapped = x
        if self.pool is not None:
            x = self.pool.forward(x, mode)
        return x

    def backward(self, grad_output: Tensor, grad_tap: Tensor | None = None) -> Tensor:
        g = grad_output
        if self.pool is not None:
            g = self.pool.backward(g)
        for i in reversed(range(len(self.stages))):
            if i == self.spec.aux_tap and grad_tap is not None:
                self._expect_grad(grad_tap, g.shape)
                g = Tensor.wrap(g.array + grad_tap.array, f"{self.name}.stage{i}")
            g = self.stages[i].backward(g)
        return g

    def parameters(self) -> list[Parameter]:
        return [p for stage in self.stages for p in stage.parameters()]

    def named_leaves(self, prefix: str = "") -> Iterator[tuple[str, Layer]]:
        for stage in self.stages:
            yield from stage.named_leaves(f"{prefix}{self.name}.")

    def walk(self) -> Iterator[Layer]:
        yield self
        for stage in self.stages:
            yield from stage.walk()

    def hyperparameters(self) -> dict[str, Any]:
        return self.spec.to_dict()
