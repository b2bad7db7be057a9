from __future__ import annotations

from pathlib import Path

import pytest

from gtn.config import (
    ConfigValidationError,
    ExperimentConfig,
    ExperimentConfigLoader,
    apply_overrides,
    get_settings,
    leaf_keys,
    parse_override,
)

REPO_CONFIG = Path(__file__).resolve().parents[2] / "config"


def _write(config_dir: Path, name: str, lines: list[str]) -> Path:
    config_dir.mkdir(parents=True, exist_ok=True)
    path = config_dir / name
    path.write_text("\n".join(lines), encoding="utf-8")
    return path


def test_config_loader_expands_env_placeholders(tmp_path: Path, monkeypatch):
    config_dir = tmp_path / "config"
    _write(
        config_dir,
        "exp.yaml",
        [
            "optim:",
            "  epochs: ${GTN_TEST_EPOCHS:-30}",
            "  lr: ${GTN_TEST_LR}",
            "output_dir: ${GTN_TEST_ROOT:-runs}/exp",
        ],
    )
    monkeypatch.setenv("GTN_TEST_LR", "0.05")
    monkeypatch.delenv("GTN_TEST_EPOCHS", raising=False)
    monkeypatch.delenv("GTN_TEST_ROOT", raising=False)

    config = ExperimentConfigLoader(base_path=config_dir).load("exp.yaml")
    assert config.optim.epochs == 30
    assert config.optim.lr == 0.05
    assert config.output_dir == "runs/exp"


def test_config_loader_substitutes_empty_for_missing_env_without_default(
    tmp_path: Path,
    monkeypatch,
):
    config_dir = tmp_path / "config"
    _write(config_dir, "exp.yaml", ["data:", "  path: ${GTN_TEST_MISSING}"])
    monkeypatch.delenv("GTN_TEST_MISSING", raising=False)

    data = ExperimentConfigLoader(base_path=config_dir).load_yaml("exp.yaml")
    assert data["data"]["path"] is None


def test_unknown_keys_and_bad_values_are_rejected(tmp_path: Path):
    config_dir = tmp_path / "config"
    _write(config_dir, "typo.yaml", ["optim:", "  learning_rate: 0.1"])
    _write(config_dir, "bad.yaml", ["model:", "  variant: unknown", "  p1: 1.5"])
    loader = ExperimentConfigLoader(base_path=config_dir)
    with pytest.raises(ConfigValidationError, match="learning_rate"):
        loader.load("typo")
    with pytest.raises(ConfigValidationError) as exc:
        loader.load("bad.yaml")
    assert "model.variant" in str(exc.value)
    assert "model.p1" in str(exc.value)
    with pytest.raises(ConfigValidationError):
        loader.load("missing.yaml")


def test_overrides_are_typed_and_take_precedence(tmp_path: Path):
    config_dir = tmp_path / "config"
    _write(config_dir, "exp.yaml", ["optim:", "  lr: 0.1", "seeds: [0, 1]"])
    overrides = dict(
        parse_override(text) for text in ["optim.lr=0.2", "seeds=[3]", "model.bias=false"]
    )
    config = ExperimentConfigLoader(base_path=config_dir).load("exp.yaml", overrides)
    assert config.optim.lr == 0.2
    assert config.seeds == [3]
    assert config.model.bias is False


def test_override_parsing_errors():
    with pytest.raises(ConfigValidationError):
        parse_override("optim.lr")
    with pytest.raises(ConfigValidationError):
        apply_overrides({}, {"optim.nope": 1})
    assert parse_override("data.path=") == ("data.path", None)


def test_leaf_keys_cover_every_section():
    keys = leaf_keys()
    assert "optim.lr" in keys
    assert "model.reduction" in keys
    assert "reproduce.analysis_tol" in keys
    assert "seeds" in keys
    assert "model" not in keys


def test_defaults_map_onto_runtime_objects():
    config = ExperimentConfig()
    assert config.train_config(epochs=2).epochs == 2
    assert config.variant_options(lam=0.0).lam == 0.0
    assert config.backbone_spec((64,)).feature_dim == 128
    assert config.synthetic_spec(5, overlap=0.9).overlap == 0.9
    assert config.augmentation_policy() is None
    with pytest.raises(ValueError):
        ExperimentConfig(seeds=[])


@pytest.mark.parametrize("name", ["desk", "recipe", "cnn"])
def test_shipped_presets_validate(name: str):
    config = ExperimentConfigLoader(base_path=REPO_CONFIG).load(name)
    assert config.seeds


def test_output_dir_defaults_to_runs_dir_setting(tmp_path: Path, monkeypatch):
    monkeypatch.setenv("GTN_RUNS_DIR", "/tmp/gtn-runs")
    get_settings.cache_clear()
    try:
        assert ExperimentConfig().output_dir == "/tmp/gtn-runs"
        path = _write(tmp_path, "exp.yaml", ["optim:", "  epochs: 1"])
        assert ExperimentConfigLoader(tmp_path).load(path).output_dir == "/tmp/gtn-runs"
        with_dir = _write(tmp_path, "dir.yaml", ["output_dir: elsewhere"])
        assert ExperimentConfigLoader(tmp_path).load(with_dir).output_dir == "elsewhere"
    finally:
        get_settings.cache_clear()
