from __future__ import annotations

import json
import logging

import pytest

from gtn.config import get_settings
from gtn.logging import JsonFormatter, configure_logging


@pytest.fixture()
def fresh_settings():
    get_settings.cache_clear()
    yield get_settings
    get_settings.cache_clear()


def test_settings_read_environment(monkeypatch, fresh_settings):
    monkeypatch.setenv("GTN_ENV", "prod")
    monkeypatch.setenv("GTN_LOG_LEVEL", "debug")
    monkeypatch.setenv("GTN_RUNS_DIR", "/tmp/gtn-runs")
    monkeypatch.setenv("GTN_RECORD_GIT_VERSION", "no")
    settings = fresh_settings()
    assert settings.app_env == "prod"
    assert settings.log_level == "DEBUG"
    assert settings.runs_dir == "/tmp/gtn-runs"
    assert settings.record_git_version is False


def test_settings_fall_back_on_unknown_values(monkeypatch, fresh_settings):
    monkeypatch.setenv("GTN_ENV", "staging")
    monkeypatch.setenv("GTN_LOG_FORMAT", "xml")
    settings = fresh_settings()
    assert settings.app_env == "dev"
    assert settings.log_format == "json"


def test_json_formatter_carries_context_fields():
    record = logging.LogRecord("gtn.test", logging.INFO, __file__, 1, "epoch %d", (3,), None)
    record.seed = 7
    record.epoch = 3
    payload = json.loads(JsonFormatter().format(record))
    assert payload["message"] == "epoch 3"
    assert payload["level"] == "INFO"
    assert payload["seed"] == 7
    assert payload["epoch"] == 3
    assert "variant" not in payload


def test_configure_logging_replaces_root_handlers():
    root = logging.getLogger()
    saved_handlers, saved_level = root.handlers[:], root.level
    try:
        configure_logging("WARNING", "json")
        assert len(root.handlers) == 1
        assert isinstance(root.handlers[0].formatter, JsonFormatter)
        assert root.level == logging.WARNING
        configure_logging("INFO", "text")
        assert not isinstance(root.handlers[0].formatter, JsonFormatter)
    finally:
        root.handlers = saved_handlers
        root.setLevel(saved_level)
