from gtn.model.backbone import Backbone, BackboneKind, BackboneSpec
from gtn.model.checkpoint import attach_backbone, load_model, save_model
from gtn.model.network import (
    DEFAULT_LAMBDA,
    GROUPS,
    GtnModel,
    LossBreakdown,
    ModelObjective,
    ModelOutput,
    combine,
    combined_loss,
)
from gtn.model.registry import (
    MODEL_VARIANTS,
    VariantOptions,
    build_da_baseline,
    build_model,
    list_supported_variants,
)

__all__ = [
    "Backbone",
    "BackboneKind",
    "BackboneSpec",
    "DEFAULT_LAMBDA",
    "GROUPS",
    "GtnModel",
    "LossBreakdown",
    "MODEL_VARIANTS",
    "ModelObjective",
    "ModelOutput",
    "VariantOptions",
    "attach_backbone",
    "build_da_baseline",
    "build_model",
    "combine",
    "combined_loss",
    "list_supported_variants",
    "load_model",
    "save_model",
]
