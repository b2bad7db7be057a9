from __future__ import annotations

import json
from pathlib import Path

import pytest

from gtn.cli import build_parser, main

TINY_CONFIG = """\
model:
  widths: [16, 8]
  reduction: 2
optim:
  epochs: 2
  pretrain_epochs: 2
  lwf_epochs: 1
  batch_size: 16
  freeze_epochs: 1
data:
  input_dim: 16
  source_classes: 4
  target_classes: 3
  samples_per_class: 20
  factors_per_task: 4
analysis:
  samples: 10
reproduce:
  seeds: [0]
  gate_draws: 20
seeds: [0]
"""


@pytest.fixture()
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY_CONFIG, encoding="utf-8")
    return path


def _run(capsys, *argv: str) -> tuple[int, str]:
    code = main(list(argv))
    return code, capsys.readouterr().out


def _tree(root: Path) -> dict[str, bytes]:
    files = sorted(p for p in root.rglob("*") if p.is_file())
    return {str(p.relative_to(root)): p.read_bytes() for p in files}


def test_parser_registers_per_key_flags():
    args = build_parser().parse_args(["generate", "--optim.lr", "0.5", "--seed", "3"])
    assert vars(args)["cfg:optim.lr"] == "0.5"
    assert args.seed == 3


def test_unknown_subcommand_is_a_usage_error():
    assert main(["bogus"]) == 2


def test_unknown_config_key_is_a_usage_error(tmp_path, config_file):
    code = main(
        ["generate", "--config", str(config_file), "--output-dir", str(tmp_path / "run"),
         "--set", "model.nope=1"]
    )
    assert code == 2


def test_unknown_config_flag_is_a_usage_error(tmp_path, config_file):
    assert main(["generate", "--config", str(config_file), "--model.nope", "1"]) == 2


def test_invalid_config_value_is_a_usage_error(tmp_path, config_file):
    code = main(
        ["generate", "--config", str(config_file), "--output-dir", str(tmp_path / "run"),
         "--set", "optim.lr=-1"]
    )
    assert code == 2


def test_missing_config_file_is_a_usage_error(tmp_path):
    assert main(["generate", "--config", str(tmp_path / "absent.yaml")]) == 2


def test_generate_writes_datasets_and_archives_config(tmp_path, config_file, capsys):
    out = tmp_path / "gen"
    code, stdout = _run(
        capsys, "generate", "--config", str(config_file), "--output-dir", str(out), "--json"
    )
    assert code == 0
    payload = json.loads(stdout)
    assert set(payload) == {"source", "target"}
    assert (out / "source" / "manifest.json").is_file()
    assert (out / "target" / "train.bin").is_file()
    assert (out / "layout.json").is_file()
    assert (out / "config.yaml").read_text(encoding="utf-8") == TINY_CONFIG
    assert json.loads((out / "seeds.json").read_text())["seeds"] == [0]
    assert (out / "version.txt").read_text().startswith("gated-transfer ")


def test_per_key_flag_reaches_the_archived_config(tmp_path, config_file):
    out = tmp_path / "gen"
    code = main(
        ["generate", "--config", str(config_file), "--output-dir", str(out),
         "--data.overlap", "0.9", "--seeds", "4,5"]
    )
    assert code == 0
    resolved = json.loads((out / "config.json").read_text())
    assert resolved["data"]["overlap"] == 0.9
    assert resolved["seeds"] == [4, 5]


@pytest.mark.slow
def test_pretrain_transfer_eval_analyze_chain(tmp_path, config_file, capsys):
    pre, tr, an = tmp_path / "pre", tmp_path / "tr", tmp_path / "an"
    code, _ = _run(capsys, "pretrain", "--config", str(config_file), "--output-dir", str(pre))
    assert code == 0
    assert (pre / "seed-0" / "checkpoint" / "model.json").is_file()
    assert (pre / "seed-0" / "train_log.csv").is_file()

    source = str(pre / "seed-{seed}" / "checkpoint")
    code, stdout = _run(
        capsys, "transfer", "--config", str(config_file), "--output-dir", str(tr),
        "--source", source, "--json",
    )
    assert code == 0
    rows = json.loads(stdout)
    assert rows[0]["variant"] == "gtn"
    assert rows[0]["epochs"] == 2
    assert 0.0 <= rows[0]["test_accuracy"] <= 1.0
    assert (tr / "seed-0" / "report" / "gate_report.json").is_file()

    target = str(tr / "seed-{seed}" / "checkpoint")
    code, stdout = _run(
        capsys, "eval", "--config", str(config_file), "--checkpoint", target, "--json"
    )
    assert code == 0
    results = json.loads(stdout)
    assert set(results) == {"train", "val", "test"}
    assert results["test"]["count"] == 9

    code, stdout = _run(
        capsys, "analyze", "--config", str(config_file), "--output-dir", str(an),
        "--checkpoint", target, "--json",
    )
    assert code == 0
    report = json.loads(stdout)
    assert sum(report["histogram"]) == report["samples"] * report["channels"]
    assert (an / "gate_report.json").is_file()
    assert (an / "features.csv").is_file()

    code, stdout = _run(
        capsys, "lwf", "--config", str(config_file), "--output-dir", str(tmp_path / "lwf"),
        "--source", source, "--target", target, "--json",
    )
    assert code == 0
    row = json.loads(stdout)[0]
    assert set(row) == {"seed", "oracle", "gtn"}


@pytest.mark.slow
def test_pretrain_is_deterministic(tmp_path, config_file):
    for name in ("a", "b"):
        code = main(
            ["pretrain", "--config", str(config_file), "--output-dir", str(tmp_path / name)]
        )
        assert code == 0
    first = _tree(tmp_path / "a" / "seed-0")
    second = _tree(tmp_path / "b" / "seed-0")
    assert first
    assert first == second


@pytest.mark.slow
def test_reproduce_reports_pass_and_fail(tmp_path, config_file):
    ok = tmp_path / "ok"
    code = main(
        ["reproduce", "--config", str(config_file), "--output-dir", str(ok),
         "--set", "reproduce.criteria=[3, 9]"]
    )
    assert code == 0
    summary = json.loads((ok / "results" / "summary.json").read_text())
    assert [entry["criterion_id"] for entry in summary] == [3, 9]
    assert all(entry["pass"] for entry in summary)
    assert "2/2 criteria passed" in (ok / "results" / "summary.txt").read_text()

    failing = tmp_path / "failing"
    code = main(
        ["reproduce", "--config", str(config_file), "--output-dir", str(failing),
         "--set", "reproduce.criteria=[9]", "--set", "reproduce.analysis_tol=-1"]
    )
    assert code == 1
    summary = json.loads((failing / "results" / "summary.json").read_text())
    assert summary[0]["pass"] is False
