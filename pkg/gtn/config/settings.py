"""Process-level settings read from the environment."""
import logging
from dataclasses import dataclass
from functools import lru_cache
from os import getenv
from typing import Literal

from gtn import __version__

logger = logging.getLogger(__name__)

_LOG_FORMATS = {"json", "text"}


@dataclass
class Settings:
    app_name: str = "gated-transfer"
    app_env: Literal["dev", "test", "prod"] = "dev"
    app_version: str = __version__
    log_level: str = "INFO"
    log_format: Literal["json", "text"] = "json"
    runs_dir: str = "runs"
    config_dir: str = "config"
    record_git_version: bool = True


def _as_bool(value: str | None, default: bool = False) -> bool:
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "y", "on"}


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    app_env = getenv("GTN_ENV", "dev")
    if app_env not in {"dev", "test", "prod"}:
        logger.warning("GTN_ENV=%s is not one of dev/test/prod; using dev", app_env)
        app_env = "dev"

    log_format = getenv("GTN_LOG_FORMAT", "json").strip().lower()
    if log_format not in _LOG_FORMATS:
        logger.warning("GTN_LOG_FORMAT=%s is not supported; using json", log_format)
        log_format = "json"

    return Settings(
        app_env=app_env,
        app_version=getenv("GTN_VERSION", __version__),
        log_level=getenv("GTN_LOG_LEVEL", "INFO").upper(),
        log_format=log_format,
        runs_dir=getenv("GTN_RUNS_DIR", "runs"),
        config_dir=getenv("GTN_CONFIG_DIR", "config"),
        record_git_version=_as_bool(getenv("GTN_RECORD_GIT_VERSION"), True),
    )
