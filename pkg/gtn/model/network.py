"""Backbone + transfer module + main classifier + auxiliary classifier."""
from __future__ import annotations

import hashlib
import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from gtn.errors import LayerStateError
from gtn.layers.base import Layer, Mode, Parameter, Sequential
from gtn.layers.dropout import DropoutLayer
from gtn.layers.linear import LinearLayer
from gtn.layers.loss import SoftmaxCrossEntropy, predictions
from gtn.layers.pooling import GlobalAvgPool
from gtn.model.backbone import Backbone, BackboneKind
from gtn.tensor import Rng, Tensor
from gtn.transfer import TransferModule

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.2
GROUPS = ("backbone", "adapter", "main_head", "aux_head")


@dataclass(frozen=True)
class ModelOutput:
    main_logits: Tensor
    aux_logits: Tensor | None
    gate: Tensor | None
    features: Tensor
    adapted: Tensor


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    main: float
    aux: float


def combine(main: float, aux: float, lam: float) -> LossBreakdown:
    if lam < 0:
        raise ValueError(f"aux loss weight must be >= 0, got {lam}")
    return LossBreakdown(total=main + lam * aux, main=main, aux=aux)


def combined_loss(
    main_logits: Tensor, aux_logits: Tensor | None, labels: np.ndarray, lam: float
) -> LossBreakdown:
    """Summed objective ``main + lam * aux``; ``aux`` is 0 without aux logits."""
    main = SoftmaxCrossEntropy("main_loss").forward(main_logits, labels)
    aux = 0.0
    if aux_logits is not None:
        aux = SoftmaxCrossEntropy("aux_loss").forward(aux_logits, labels)
    return combine(main, aux, lam)


def build_aux_head(backbone: Backbone, num_classes: int, rng: Rng | None = None) -> Sequential:
    layers: list[Layer] = []
    if backbone.spec.kind is BackboneKind.CNN:
        layers.append(GlobalAvgPool(name="gap"))
    layers.append(
        LinearLayer(
            backbone.spec.aux_dim, num_classes, bias=backbone.spec.bias, rng=rng, name="linear"
        )
    )
    return Sequential(layers, name="aux_head")


class GtnModel:
    """The assembled network.

    ``adapter`` is a TransferModule, a depth-augmented neck, or None; the
    auxiliary head reads the backbone's tapped stage and only contributes to
    the training objective.
    """

    def __init__(
        self,
        backbone: Backbone,
        main_head: LinearLayer,
        *,
        adapter: Layer | None = None,
        aux_head: Layer | None = None,
        lam: float = DEFAULT_LAMBDA,
        variant: str = "gtn",
        always_frozen: Iterable[str] = (),
    ) -> None:
        if lam < 0:
            raise ValueError(f"aux loss weight must be >= 0, got {lam}")
        self.backbone = backbone
        self.adapter = adapter
        self.main_head = main_head
        self.aux_head = aux_head
        self.lam = float(lam)
        self.variant = variant
        self.always_frozen = frozenset(always_frozen)
        self.frozen: set[str] = set(self.always_frozen)
        self._main_loss = SoftmaxCrossEntropy("main_loss")
        self._aux_loss = SoftmaxCrossEntropy("aux_loss")
        self._aux_active = False
        self._loss_pending = False

    # ── Structure ─────────────────────────────────────────────────────────

    @property
    def num_classes(self) -> int:
        return self.main_head.out_features

    @property
    def transfer(self) -> TransferModule | None:
        return self.adapter if isinstance(self.adapter, TransferModule) else None

    def components(self) -> dict[str, Layer]:
        parts = {
            "backbone": self.backbone,
            "adapter": self.adapter,
            "main_head": self.main_head,
            "aux_head": self.aux_head,
        }
        return {group: layer for group, layer in parts.items() if layer is not None}

    def named_leaves(self) -> Iterator[tuple[str, Layer]]:
        for layer in self.components().values():
            yield from layer.named_leaves()

    def walk(self) -> Iterator[Layer]:
        for layer in self.components().values():
            yield from layer.walk()

    def param_groups(self) -> dict[str, list[Parameter]]:
        return {group: layer.parameters() for group, layer in self.components().items()}

    def parameters(self, groups: Iterable[str] | None = None) -> list[Parameter]:
        wanted = set(groups) if groups is not None else set(GROUPS)
        return [p for g, params in self.param_groups().items() if g in wanted for p in params]

    def count_parameters(self, groups: Iterable[str] | None = None) -> int:
        return sum(p.size for p in self.parameters(groups))

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def set_dropout_rng(self, rng: Rng) -> None:
        dropouts = [layer for layer in self.walk() if isinstance(layer, DropoutLayer)]
        for i, layer in enumerate(dropouts):
            layer.rng = rng.split(f"dropout{i}")

    # ── Freezing ──────────────────────────────────────────────────────────

    def freeze(self, group: str) -> None:
        self._check_group(group)
        self.frozen.add(group)

    def unfreeze(self, group: str) -> None:
        self._check_group(group)
        if group in self.always_frozen:
            logger.debug("%s stays frozen for variant %s", group, self.variant)
            return
        self.frozen.discard(group)

    def is_frozen(self, group: str) -> bool:
        return group in self.frozen

    def _check_group(self, group: str) -> None:
        if group not in GROUPS:
            raise ValueError(f"unknown parameter group '{group}', expected one of {GROUPS}")

    # ── Forward / loss / backward ─────────────────────────────────────────

    def forward(
        self, x: Tensor, mode: Mode = Mode.EVAL, compute_aux: bool | None = None
    ) -> ModelOutput:
        features = self.backbone.forward(x, mode)
        adapted = features
        gate = None
        if self.adapter is not None:
            adapted = self.adapter.forward(features, mode)
            if isinstance(self.adapter, TransferModule):
                gate = self.adapter.last_gate
        main_logits = self.main_head.forward(adapted, mode)
        if compute_aux is None:
            compute_aux = mode is Mode.TRAIN and self.lam > 0
        aux_logits = None
        if compute_aux and self.aux_head is not None:
            aux_logits = self.aux_head.forward(self.backbone.tapped, mode)
        self._aux_active = aux_logits is not None
        return ModelOutput(main_logits, aux_logits, gate, features, adapted)

    def loss(self, output: ModelOutput, labels: np.ndarray) -> LossBreakdown:
        main = self._main_loss.forward(output.main_logits, labels)
        aux = 0.0
        if output.aux_logits is not None:
            aux = self._aux_loss.forward(output.aux_logits, labels)
        self._loss_pending = True
        return combine(main, aux, self.lam)

    def backward(self, scale: float = 1.0) -> Tensor | None:
        """Backpropagate ``scale * total_loss``; return dL/dx, or None when the backbone is frozen.

        The aux branch is skipped entirely when lam == 0, so gradients equal
        those of a model without it. Frozen groups end with zero gradients.
        """
        if not self._loss_pending:
            raise LayerStateError("model: backward called before loss")
        g = self.main_head.backward(self._main_loss.backward(scale))
        if self.adapter is not None:
            g = self.adapter.backward(g)
        grad_tap = None
        if self._aux_active and self.lam > 0:
            grad_tap = self.aux_head.backward(self._aux_loss.backward(scale * self.lam))
        self._aux_active = False
        self._loss_pending = False
        for group, layer in self.components().items():
            if group != "backbone" and group in self.frozen:
                layer.zero_grad()
        if "backbone" in self.frozen:
            return None
        return self.backbone.backward(g, grad_tap)

    # ── Inference ─────────────────────────────────────────────────────────

    def predict(self, x: Tensor) -> np.ndarray:
        return predictions(self.forward(x, Mode.EVAL, compute_aux=False).main_logits)

    def drop_aux_head(self) -> None:
        self.aux_head = None
        self._aux_active = False

    def backbone_checksum(self) -> str:
        digest = hashlib.sha256()
        for param in self.backbone.parameters():
            digest.update(np.ascontiguousarray(param.data).tobytes())
        return digest.hexdigest()

    def __repr__(self) -> str:
        return (
            f"GtnModel(variant={self.variant!r}, classes={self.num_classes}, lam={self.lam}, "
            f"params={self.count_parameters()}, frozen={sorted(self.frozen)})"
        )


class ModelObjective:
    """Scalar-objective view of a model for ``grad_check``: x -> [total loss]."""

    def __init__(
        self, model: GtnModel, labels: np.ndarray, compute_aux: bool | None = None
    ) -> None:
        self.model = model
        self.labels = labels
        self.compute_aux = compute_aux

    def forward(self, x: Tensor, mode: Mode = Mode.EVAL) -> Tensor:
        output = self.model.forward(x, mode, self.compute_aux)
        return Tensor([self.model.loss(output, self.labels).total])

    def backward(self, grad_output: Tensor) -> Tensor:
        dx = self.model.backward(scale=grad_output.item())
        if dx is None:
            raise LayerStateError("model: input gradient unavailable while the backbone is frozen")
        return dx

    def parameters(self) -> list[Parameter]:
        groups = [g for g in GROUPS if g not in self.model.frozen]
        return self.model.parameters(groups)

    def zero_grad(self) -> None:
        self.model.zero_grad()

    def walk(self) -> Iterator[Layer]:
        return self.model.walk()
