"""Multi-seed ablation sweeps over variants and hyperparameters."""
from __future__ import annotations

import csv
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from gtn.config.loader import ExperimentConfig
from gtn.experiments.pipeline import CHECKPOINT_DIR, load_tasks, pretrain_source, transfer_target
from gtn.experiments.rundir import RunDirectory

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class VariantRun:
    label: str
    variant: str
    changes: dict[str, Any] = field(default_factory=dict)


@dataclass
class SeedOutcome:
    seed: int
    source_accuracy: float
    rows: list[dict[str, Any]]


def run_seeds(fn: Callable[[int], T], seeds: Sequence[int], jobs: int = 1) -> list[tuple[int, T]]:
    """Run ``fn`` once per seed, in worker processes when ``jobs > 1``; sorted by seed."""
    ordered = sorted(seeds)
    if jobs <= 1 or len(ordered) <= 1:
        return [(seed, fn(seed)) for seed in ordered]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(fn, ordered))
    return list(zip(ordered, results, strict=True))


def seed_pipeline(
    config: ExperimentConfig,
    runs: Sequence[VariantRun],
    out: Path,
    seed: int,
    *,
    overlap: float | None = None,
) -> SeedOutcome:
    """Pretrain once on the source task, then transfer every variant in ``runs``."""
    tasks = load_tasks(config, seed, overlap=overlap)
    base = out / f"seed-{seed}"
    source = pretrain_source(config, seed, tasks.source, base / "pretrain")
    rows = []
    for run in runs:
        result = transfer_target(
            config,
            seed,
            tasks.target,
            base / "pretrain" / CHECKPOINT_DIR,
            base / run.label,
            variant=run.variant,
            option_changes=run.changes,
            label=run.label,
        )
        rows.append({"label": run.label, "seed": seed, **result.metrics()})
    return SeedOutcome(seed, source.test.accuracy, rows)


def aggregate(rows: Sequence[dict[str, Any]], labels: Sequence[str]) -> list[dict[str, Any]]:
    """Mean and population std of the per-seed metrics for each label, in ``labels`` order."""
    table = []
    for label in labels:
        picked = [r for r in rows if r["label"] == label]
        acc = np.array([r["test_accuracy"] for r in picked])
        gates = [r["gate_mean"] for r in picked if r.get("gate_mean") is not None]
        table.append(
            {
                "label": label,
                "seeds": len(picked),
                "accuracy_mean": float(acc.mean()) if acc.size else None,
                "accuracy_std": float(acc.std()) if acc.size else None,
                "epochs_to_best_mean": (
                    float(np.mean([r["epochs_to_best"] for r in picked])) if picked else None
                ),
                "gate_mean": float(np.mean(gates)) if gates else None,
            }
        )
    return table


def write_table(rows: Sequence[dict[str, Any]], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(rows[0]) if rows else []
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if row[h] is None else row[h] for h in header])
    return path


def lambda_runs(lambdas: Sequence[float]) -> list[VariantRun]:
    return [VariantRun(f"lambda={lam:g}", "gtn", {"lam": float(lam)}) for lam in lambdas]


def variant_runs() -> list[VariantRun]:
    return [
        VariantRun("classic-ft", "classic-ft"),
        VariantRun("fixed-feature", "fixed-feature"),
        VariantRun("da-cnn", "da-cnn"),
        VariantRun("gtn", "gtn"),
        VariantRun("residual", "residual"),
    ]


def dropout_runs(lam: float) -> list[VariantRun]:
    no_dropout = {"p1": 0.0, "p2": 0.0}
    return [
        VariantRun("classic-ft", "classic-ft"),
        VariantRun("tm-no-dropout", "gtn", {**no_dropout, "lam": 0.0}),
        VariantRun("tm-dropout", "gtn", {"lam": 0.0}),
        VariantRun("tm-aux-no-dropout", "gtn", {**no_dropout, "lam": lam}),
        VariantRun("tm-aux-dropout", "gtn", {"lam": lam}),
    ]


def residual_runs() -> list[VariantRun]:
    return [VariantRun("multiplication", "gtn"), VariantRun("summation", "residual")]


SWEEPS: dict[str, Callable[[ExperimentConfig], list[VariantRun]]] = {
    "lambda": lambda config: lambda_runs(config.reproduce.lambdas),
    "variants": lambda config: variant_runs(),
    "dropout": lambda config: dropout_runs(config.model.lam),
    "residual": lambda config: residual_runs(),
}


def list_supported_sweeps() -> list[str]:
    return sorted(SWEEPS)


def run_sweep(
    kind: str,
    config: ExperimentConfig,
    run: RunDirectory,
    *,
    seeds: Sequence[int] | None = None,
    overlap: float | None = None,
    runs: Sequence[VariantRun] | None = None,
) -> list[dict[str, Any]]:
    """Run a sweep for every seed and write ``sweep.json`` / ``sweep.csv`` / ``runs.csv``."""
    if runs is None:
        try:
            runs = SWEEPS[kind](config)
        except KeyError:
            raise ValueError(
                f"Unknown sweep '{kind}'. Allowed: {list_supported_sweeps()}"
            ) from None
    fn = partial(seed_pipeline, config, list(runs), run.path, overlap=overlap)
    outcomes = run_seeds(fn, seeds if seeds is not None else config.seeds, config.jobs)
    rows = [row for _, outcome in outcomes for row in outcome.rows]
    table = aggregate(rows, [r.label for r in runs])
    run.write_json(
        "sweep.json",
        {
            "kind": kind,
            "overlap": config.data.overlap if overlap is None else overlap,
            "seeds": [seed for seed, _ in outcomes],
            "source_accuracy": {str(seed): o.source_accuracy for seed, o in outcomes},
            "table": table,
            "runs": rows,
        },
    )
    write_table(table, run.path / "sweep.csv")
    write_table(rows, run.path / "runs.csv")
    logger.info("Sweep '%s' finished over %d seed(s)", kind, len(outcomes))
    return table
