from gtn.config.loader import (
    ConfigValidationError,
    ExperimentConfig,
    ExperimentConfigLoader,
    apply_overrides,
    leaf_keys,
    parse_override,
)
from gtn.config.settings import Settings, get_settings

__all__ = [
    "ConfigValidationError",
    "ExperimentConfig",
    "ExperimentConfigLoader",
    "Settings",
    "apply_overrides",
    "get_settings",
    "leaf_keys",
    "parse_override",
]
