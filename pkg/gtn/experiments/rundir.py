"""Run directories: everything needed to re-run a command bit-exactly."""
from __future__ import annotations

import logging
import subprocess
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

import orjson
import yaml

from gtn.config.loader import ExperimentConfig
from gtn.config.settings import get_settings
from gtn.layers.checkpoint import dump_json

logger = logging.getLogger(__name__)

CONFIG_YAML = "config.yaml"
CONFIG_JSON = "config.json"
SEEDS_FILE = "seeds.json"
VERSION_FILE = "version.txt"


@lru_cache(maxsize=1)
def git_describe() -> str | None:
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True,
            text=True,
            check=True,
            timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
    except (OSError, subprocess.SubprocessError):
        logger.warning("git describe unavailable; version.txt records the package version only")
        return None
    return result.stdout.strip() or None


def version_string() -> str:
    settings = get_settings()
    described = git_describe() if settings.record_git_version else None
    base = f"gated-transfer {settings.app_version}"
    return f"{base} ({described})" if described else base


@dataclass
class RunDirectory:
    path: Path

    @classmethod
    def create(
        cls,
        path: str | Path,
        config: ExperimentConfig,
        *,
        config_text: str = "",
        seeds: list[int] | None = None,
    ) -> RunDirectory:
        """Create ``path`` and archive the config, seed list and version string."""
        run = cls(Path(path))
        run.path.mkdir(parents=True, exist_ok=True)
        text = config_text or yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True)
        (run.path / CONFIG_YAML).write_text(text, encoding="utf-8")
        run.write_json(CONFIG_JSON, config.model_dump(mode="json"))
        run.write_json(SEEDS_FILE, {"seeds": list(seeds if seeds is not None else config.seeds)})
        (run.path / VERSION_FILE).write_text(version_string() + "\n", encoding="utf-8")
        logger.info("Run directory ready at %s", run.path)
        return run

    def sub(self, *parts: str) -> Path:
        child = self.path.joinpath(*parts)
        child.mkdir(parents=True, exist_ok=True)
        return child

    def write_json(self, name: str, data: Any) -> Path:
        target = self.path / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(dump_json(data))
        return target

    def read_json(self, name: str) -> Any:
        return orjson.loads((self.path / name).read_bytes())
