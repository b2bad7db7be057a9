from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from gtn.analysis import (
    GateReport,
    build_report,
    collect_gates,
    compare_reports,
    export_features,
    feature_stats,
    histogram_gates,
    read_report,
    sparsity,
    write_comparison,
    write_report,
)
from gtn.data import SyntheticTransferSpec, generate_synthetic
from gtn.errors import DimensionError, GateRangeError
from gtn.experiments.checks import naive_histogram, naive_sparsity, naive_stats
from gtn.tensor import Rng


def test_histogram_one_value_per_bin():
    gates = (np.arange(10) / 10).reshape(2, 5)
    assert histogram_gates(gates).tolist() == [1] * 10


def test_histogram_closes_the_last_bin_and_rejects_out_of_range():
    assert histogram_gates(np.array([[1.0, 0.0]])).tolist() == [1] + [0] * 8 + [1]
    with pytest.raises(GateRangeError):
        histogram_gates(np.array([[1.2]]))
    with pytest.raises(GateRangeError):
        histogram_gates(np.array([[-0.01]]))
    with pytest.raises(DimensionError):
        histogram_gates(np.ones(3))


def test_statistics_agree_with_naive_loops():
    gates = Rng(4).uniform((37, 11))
    assert histogram_gates(gates).tolist() == naive_histogram(gates)
    mean, std = feature_stats(gates)
    n_mean, n_std = naive_stats(gates)
    assert np.allclose(mean, n_mean, atol=1e-12)
    assert np.allclose(std, n_std, atol=1e-12)
    for threshold in (0.1, 0.5, 0.9):
        assert sparsity(gates, threshold) == naive_sparsity(gates, threshold)


def test_feature_stats_uses_population_std():
    mean, std = feature_stats(np.array([[0.0, 1.0], [1.0, 1.0]]))
    assert mean.tolist() == [0.5, 1.0]
    assert std.tolist() == [0.5, 0.0]
    with pytest.raises(DimensionError):
        feature_stats(np.ones((1, 3)))


def test_sparsity_is_strict():
    gates = np.array([[0.5, 0.49, 0.51, 0.0]])
    assert sparsity(gates, 0.5) == 0.5
    assert sparsity(gates, 0.0) == 0.0


def test_report_round_trip_and_files(tmp_path: Path, make_model):
    gates = Rng(1).uniform((20, 8))
    report = build_report(gates, model=make_model("gtn"), model_id="m", dataset_id="d")
    assert sum(report.histogram) == 160
    assert report.sparsity_at(0.5) == pytest.approx(sparsity(gates, 0.5))
    assert len(report.classifier_mean) == 8
    paths = write_report(report, tmp_path / "report")
    assert read_report(tmp_path / "report") == report
    header = paths["features_csv"].read_text(encoding="utf-8").splitlines()[0]
    assert header == "channel,gate_mean,gate_std,weight_mean,weight_std"
    dat = paths["histogram_dat"].read_text(encoding="utf-8").splitlines()
    assert dat[0] == "# bin_lo bin_hi count"
    assert len(dat) == 11


def test_report_validation_rejects_inconsistent_counts():
    with pytest.raises(ValidationError):
        GateReport(
            samples=2,
            channels=1,
            histogram=[1] * 10,
            per_feature_mean=[0.5],
            per_feature_std=[0.1],
            gate_mean=0.5,
            sparsity={"0.5": 0.5},
        )


def test_compare_reports_writes_one_row_per_label(tmp_path: Path):
    a = build_report(Rng(2).uniform((10, 4)))
    b = build_report(Rng(3).uniform((10, 4)) * 0.2)
    rows = compare_reports({"gtn": a, "shrunk": b})
    assert [row["label"] for row in rows] == ["gtn", "shrunk"]
    assert rows[1]["sparsity@0.3"] == 1.0
    path = write_comparison(rows, tmp_path / "comparison.csv")
    with path.open(newline="", encoding="utf-8") as fp:
        assert len(list(csv.reader(fp))) == 3


def test_collect_gates_needs_a_transfer_module(make_model, tiny_task):
    with pytest.raises(ValueError):
        collect_gates(make_model("plain"), tiny_task.target.test, Rng(0))


def test_collect_gates_and_export_features(tmp_path: Path, make_model):
    task = generate_synthetic(
        SyntheticTransferSpec(input_dim=6, factors_per_task=2, samples_per_class=10, seed=1)
    )
    model = make_model("gtn", classes=task.target.num_classes)
    gates = collect_gates(model, task.target.train, Rng(5), samples=15, batch_size=4)
    assert gates.shape == (15, 8)
    assert gates.min() >= 0.0
    assert gates.max() <= 1.0
    again = collect_gates(model, task.target.train, Rng(5), samples=15, batch_size=15)
    assert np.array_equal(gates, again)
    features = export_features(model, task.target.test, tmp_path / "features.csv")
    lines = (tmp_path / "features.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",")[-1] == "label"
    assert len(lines) == len(task.target.test) + 1
    assert features.shape == (len(task.target.test), 8)
