from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

from gtn.layers.activations import ReLU
from gtn.layers.base import Sequential
from gtn.layers.batchnorm import BatchNorm1dLayer
from gtn.layers.linear import LinearLayer
from gtn.model.backbone import Backbone
from gtn.model.network import DEFAULT_LAMBDA, GtnModel, build_aux_head
from gtn.tensor import Rng
from gtn.transfer import GateVariant, TransferModule
from gtn.transfer.module import DEFAULT_P1, DEFAULT_P2, DEFAULT_REDUCTION


@dataclass(frozen=True)
class VariantOptions:
    lam: float = DEFAULT_LAMBDA
    reduction: int = DEFAULT_REDUCTION
    p1: float = DEFAULT_P1
    p2: float = DEFAULT_P2
    bias: bool = True
    residual_sigmoid: bool = True
    gate_variant: GateVariant | None = None


ModelBuilder = Callable[[Backbone, int, VariantOptions, Rng | None], GtnModel]


def _sub(rng: Rng | None, label: str) -> Rng | None:
    return rng.split(label) if rng is not None else None


def _main_head(backbone: Backbone, num_classes: int, bias: bool, rng: Rng | None) -> LinearLayer:
    return LinearLayer(
        backbone.spec.feature_dim,
        num_classes,
        bias=bias,
        rng=_sub(rng, "main_head"),
        name="main_head",
    )


def _transfer(
    backbone: Backbone, variant: GateVariant, opts: VariantOptions, rng: Rng | None
) -> TransferModule:
    return TransferModule(
        backbone.spec.feature_dim,
        reduction=opts.reduction,
        p1=opts.p1,
        p2=opts.p2,
        bias=opts.bias,
        variant=variant,
        residual_sigmoid=opts.residual_sigmoid,
        rng=_sub(rng, "transfer"),
    )


def _gated_model(name: str, default_gate: GateVariant) -> ModelBuilder:
    def build(
        backbone: Backbone, num_classes: int, opts: VariantOptions, rng: Rng | None
    ) -> GtnModel:
        gate = opts.gate_variant or default_gate
        aux = build_aux_head(backbone, num_classes, _sub(rng, "aux_head")) if opts.lam > 0 else None
        return GtnModel(
            backbone,
            _main_head(backbone, num_classes, opts.bias, rng),
            adapter=_transfer(backbone, gate, opts, rng),
            aux_head=aux,
            lam=opts.lam,
            variant=name,
            always_frozen=("backbone",) if gate.freezes_backbone else (),
        )

    return build


def _bypass_model(name: str, gate: GateVariant) -> ModelBuilder:
    def build(
        backbone: Backbone, num_classes: int, opts: VariantOptions, rng: Rng | None
    ) -> GtnModel:
        return GtnModel(
            backbone,
            _main_head(backbone, num_classes, opts.bias, rng),
            adapter=_transfer(backbone, gate, opts, rng),
            lam=0.0,
            variant=name,
            always_frozen=("backbone",) if gate.freezes_backbone else (),
        )

    return build


def _plain_model(
    backbone: Backbone, num_classes: int, opts: VariantOptions, rng: Rng | None
) -> GtnModel:
    return GtnModel(
        backbone, _main_head(backbone, num_classes, opts.bias, rng), lam=0.0, variant="plain"
    )


def build_da_baseline(
    backbone: Backbone, num_classes: int, rng: Rng | None = None, *, bias: bool = True
) -> GtnModel:
    """features -> FC(C->C) -> BatchNorm1d -> ReLU -> classifier, no gating."""
    c = backbone.spec.feature_dim
    neck = Sequential(
        [
            LinearLayer(c, c, bias=bias, rng=_sub(rng, "adapter"), name="fc"),
            BatchNorm1dLayer(c, name="bn"),
            ReLU(name="relu"),
        ],
        name="adapter",
    )
    return GtnModel(
        backbone,
        _main_head(backbone, num_classes, bias, rng),
        adapter=neck,
        lam=0.0,
        variant="da-cnn",
    )


def _da_model(
    backbone: Backbone, num_classes: int, opts: VariantOptions, rng: Rng | None
) -> GtnModel:
    return build_da_baseline(backbone, num_classes, rng, bias=opts.bias)


MODEL_VARIANTS: dict[str, ModelBuilder] = {
    "gtn": _gated_model("gtn", GateVariant.GATED),
    "residual": _gated_model("residual", GateVariant.RESIDUAL),
    "classic-ft": _bypass_model("classic-ft", GateVariant.IDENTITY),
    "fixed-feature": _bypass_model("fixed-feature", GateVariant.FIXED_FEATURE),
    "da-cnn": _da_model,
    "plain": _plain_model,
}


def build_model(
    variant: str,
    backbone: Backbone,
    num_classes: int,
    options: VariantOptions | None = None,
    rng: Rng | None = None,
) -> GtnModel:
    try:
        builder = MODEL_VARIANTS[variant]
    except KeyError:
        raise ValueError(
            f"Unknown model variant '{variant}'. Allowed: {list_supported_variants()}"
        ) from None
    return builder(backbone, num_classes, options or VariantOptions(), rng)


def list_supported_variants() -> list[str]:
    return sorted(MODEL_VARIANTS)
