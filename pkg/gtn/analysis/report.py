"""Gate report model and its JSON / CSV / gnuplot writers."""
from __future__ import annotations

import csv
import logging
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from gtn.analysis.gates import (
    NUM_BINS,
    SPARSITY_THRESHOLDS,
    classifier_weight_stats,
    feature_stats,
    histogram_gates,
    sparsity,
)
from gtn.layers.checkpoint import dump_json
from gtn.model.network import GtnModel

logger = logging.getLogger(__name__)

REPORT_FILE = "gate_report.json"


class GateReport(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model_id: str = ""
    dataset_id: str = ""
    samples: int = Field(ge=1)
    channels: int = Field(ge=1)
    histogram: list[int]
    per_feature_mean: list[float]
    per_feature_std: list[float]
    gate_mean: float
    sparsity: dict[str, float]
    classifier_mean: list[float] | None = None
    classifier_std: list[float] | None = None

    @model_validator(mode="after")
    def _consistent(self) -> GateReport:
        if len(self.histogram) != NUM_BINS:
            raise ValueError(f"histogram must have {NUM_BINS} bins")
        if sum(self.histogram) != self.samples * self.channels:
            raise ValueError("histogram counts must sum to samples x channels")
        if {len(self.per_feature_mean), len(self.per_feature_std)} != {self.channels}:
            raise ValueError("per-feature statistics must have one entry per channel")
        if any(s < 0 for s in self.per_feature_std):
            raise ValueError("standard deviations must be >= 0")
        if any(not 0.0 <= v <= 1.0 for v in self.sparsity.values()):
            raise ValueError("sparsity fractions must lie in [0, 1]")
        return self

    def sparsity_at(self, threshold: float) -> float:
        return self.sparsity[threshold_key(threshold)]

    def informative_mask(self) -> np.ndarray:
        """Channels whose mean gate is above the median mean gate."""
        mean = np.asarray(self.per_feature_mean)
        return mean > np.median(mean)


def threshold_key(threshold: float) -> str:
    return f"{threshold:g}"


def build_report(
    gates: np.ndarray,
    *,
    model: GtnModel | None = None,
    model_id: str = "",
    dataset_id: str = "",
    thresholds: Sequence[float] = SPARSITY_THRESHOLDS,
) -> GateReport:
    gates = np.asarray(gates, dtype=np.float64)
    hist = histogram_gates(gates)
    mean, std = feature_stats(gates)
    cls_mean = cls_std = None
    if model is not None:
        cm, cs = classifier_weight_stats(model)
        cls_mean, cls_std = cm.tolist(), cs.tolist()
    return GateReport(
        model_id=model_id,
        dataset_id=dataset_id,
        samples=gates.shape[0],
        channels=gates.shape[1],
        histogram=hist.tolist(),
        per_feature_mean=mean.tolist(),
        per_feature_std=std.tolist(),
        gate_mean=float(gates.mean()),
        sparsity={threshold_key(t): sparsity(gates, t) for t in thresholds},
        classifier_mean=cls_mean,
        classifier_std=cls_std,
    )


def _write_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        writer.writerows(rows)


def _write_dat(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    lines = ["# " + " ".join(header)]
    lines.extend(" ".join(repr(v) if isinstance(v, float) else str(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _histogram_rows(report: GateReport) -> list[list[Any]]:
    return [[i / NUM_BINS, (i + 1) / NUM_BINS, count] for i, count in enumerate(report.histogram)]


def _feature_rows(report: GateReport) -> list[list[Any]]:
    rows = []
    for c in range(report.channels):
        row: list[Any] = [c, report.per_feature_mean[c], report.per_feature_std[c]]
        if report.classifier_mean is not None and report.classifier_std is not None:
            row += [report.classifier_mean[c], report.classifier_std[c]]
        rows.append(row)
    return rows


def write_report(report: GateReport, directory: str | Path) -> dict[str, Path]:
    """Write the report as JSON plus CSV and gnuplot-ready .dat tables."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / REPORT_FILE,
        "histogram_csv": out / "gate_histogram.csv",
        "histogram_dat": out / "gate_histogram.dat",
        "features_csv": out / "feature_stats.csv",
        "features_dat": out / "feature_stats.dat",
    }
    paths["json"].write_bytes(dump_json(report.model_dump()))
    hist_header = ("bin_lo", "bin_hi", "count")
    feat_header = ["channel", "gate_mean", "gate_std"]
    if report.classifier_mean is not None:
        feat_header += ["weight_mean", "weight_std"]
    hist_rows, feat_rows = _histogram_rows(report), _feature_rows(report)
    _write_rows(paths["histogram_csv"], hist_header, hist_rows)
    _write_dat(paths["histogram_dat"], hist_header, hist_rows)
    _write_rows(paths["features_csv"], feat_header, feat_rows)
    _write_dat(paths["features_dat"], feat_header, feat_rows)
    logger.info("Wrote gate report for %s to %s", report.model_id or "model", out)
    return paths


def read_report(path: str | Path) -> GateReport:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    return GateReport.model_validate_json(path.read_bytes())


def compare_reports(reports: Mapping[str, GateReport]) -> list[dict[str, Any]]:
    """One summary row per labelled report, in the mapping's order."""
    rows = []
    for label, report in reports.items():
        row: dict[str, Any] = {
            "label": label,
            "samples": report.samples,
            "channels": report.channels,
            "gate_mean": report.gate_mean,
            "mean_feature_std": float(np.mean(report.per_feature_std)),
        }
        row.update({f"sparsity@{k}": v for k, v in report.sparsity.items()})
        rows.append(row)
    return rows


def write_comparison(rows: Sequence[Mapping[str, Any]], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(rows[0]) if rows else ["label"]
    _write_rows(path, header, [[row.get(h) for h in header] for row in rows])
    return path
