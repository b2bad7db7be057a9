from __future__ import annotations

from pathlib import Path

import yaml

from gtn.config import ExperimentConfig, get_settings
from gtn.experiments import RunDirectory, version_string
from gtn.experiments.rundir import CONFIG_JSON, CONFIG_YAML, SEEDS_FILE, VERSION_FILE


def test_run_directory_archives_config_seeds_and_version(tmp_path: Path):
    config = ExperimentConfig(seeds=[1, 2])
    run = RunDirectory.create(tmp_path / "run", config, config_text="seeds: [1, 2]\n")
    assert (run.path / CONFIG_YAML).read_text(encoding="utf-8") == "seeds: [1, 2]\n"
    assert run.read_json(CONFIG_JSON)["seeds"] == [1, 2]
    assert run.read_json(SEEDS_FILE) == {"seeds": [1, 2]}
    version = (run.path / VERSION_FILE).read_text(encoding="utf-8")
    assert version.startswith("gated-transfer ")


def test_run_directory_dumps_resolved_config_without_source_text(tmp_path: Path):
    config = ExperimentConfig(output_dir="elsewhere")
    run = RunDirectory.create(tmp_path, config, seeds=[9])
    archived = yaml.safe_load((run.path / CONFIG_YAML).read_text(encoding="utf-8"))
    assert archived["output_dir"] == "elsewhere"
    assert ExperimentConfig.model_validate(archived) == config
    assert run.read_json(SEEDS_FILE) == {"seeds": [9]}


def test_sub_and_json_helpers(tmp_path: Path):
    run = RunDirectory(tmp_path)
    child = run.sub("seed-0", "source")
    assert child.is_dir()
    run.write_json("results/summary.json", {"ok": True})
    assert run.read_json("results/summary.json") == {"ok": True}


def test_version_string_without_git(monkeypatch):
    monkeypatch.setenv("GTN_RECORD_GIT_VERSION", "0")
    get_settings.cache_clear()
    try:
        assert version_string() == f"gated-transfer {get_settings().app_version}"
    finally:
        get_settings.cache_clear()
