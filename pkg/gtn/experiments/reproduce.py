"""Acceptance suite: runs every criterion and writes ``results/summary.json``."""
from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from gtn.analysis import collect_gates, histogram_gates
from gtn.config.loader import ExperimentConfig
from gtn.experiments import checks
from gtn.experiments.pipeline import (
    StageResult,
    TaskPair,
    evaluate_checkpoint,
    informative_gate_means,
    load_tasks,
    pretrain_source,
    relearn_source,
    transfer_target,
)
from gtn.experiments.rundir import RunDirectory
from gtn.experiments.sweeps import aggregate, lambda_runs, write_table
from gtn.layers.base import Mode
from gtn.model import Backbone, build_model
from gtn.optim import FreezeProtocol, Trainer
from gtn.tensor import Rng

logger = logging.getLogger(__name__)

SUMMARY_JSON = "results/summary.json"
SUMMARY_TXT = "results/summary.txt"


@dataclass
class CriterionResult:
    criterion_id: int
    description: str
    value: float
    threshold: float
    passed: bool
    runtime_s: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "criterion_id": self.criterion_id,
            "description": self.description,
            "value": self.value,
            "threshold": self.threshold,
            "pass": self.passed,
            "runtime_s": self.runtime_s,
            "details": self.details,
        }


class ReproduceContext:
    """Caches tasks, pretrained sources and transfers shared between criteria."""

    def __init__(self, config: ExperimentConfig, run: RunDirectory) -> None:
        self.config = config
        self.run = run
        self._tasks: dict[tuple[int, float | None], TaskPair] = {}
        self._sources: dict[int, StageResult] = {}
        self._transfers: dict[tuple[str, int, float | None], StageResult] = {}

    @property
    def seeds(self) -> list[int]:
        return sorted(self.config.reproduce.seeds)

    def tasks(self, seed: int, overlap: float | None = None) -> TaskPair:
        key = (seed, overlap)
        if key not in self._tasks:
            self._tasks[key] = load_tasks(self.config, seed, overlap=overlap)
        return self._tasks[key]

    def source(self, seed: int) -> StageResult:
        if seed not in self._sources:
            out = self.run.sub("pretrain", f"seed-{seed}")
            self._sources[seed] = pretrain_source(self.config, seed, self.tasks(seed).source, out)
        return self._sources[seed]

    def transfer(
        self,
        label: str,
        variant: str,
        seed: int,
        *,
        overlap: float | None = None,
        changes: dict[str, Any] | None = None,
    ) -> StageResult:
        key = (label, seed, overlap)
        if key not in self._transfers:
            tag = "default" if overlap is None else f"overlap-{overlap:g}"
            out = self.run.sub("transfer", tag, f"seed-{seed}", label)
            self._transfers[key] = transfer_target(
                self.config,
                seed,
                self.tasks(seed, overlap).target,
                self.source(seed).checkpoint,
                out,
                variant=variant,
                option_changes=changes,
                label=label,
            )
        return self._transfers[key]


# -- criteria -----------------------------------------------------------------


def gradient_correctness(ctx: ReproduceContext) -> CriterionResult:
    r = ctx.config.reproduce
    cases = checks.layer_cases()
    errors = checks.run_gradient_cases(cases, ctx.seeds)
    return CriterionResult(
        1,
        "Gradient correctness: every layer and the full model pass central finite differences",
        max(errors.values()),
        r.gradcheck_tol,
        checks.gradient_verdict(cases, errors, r.gradcheck_tol, r.gradcheck_tol_deterministic),
        details={"errors": errors, "deterministic_tolerance": r.gradcheck_tol_deterministic},
    )


def bypass_equivalence(ctx: ReproduceContext) -> CriterionResult:
    config = ctx.config
    seed = ctx.seeds[0]
    target = ctx.tasks(seed).target
    spec = config.backbone_spec(target.input_shape)
    rng = Rng(seed).split("bypass")
    identity_options = config.variant_options(lam=0.0, gate_variant="identity")
    k = target.num_classes
    gated = build_model(
        "gtn", Backbone(spec, rng.split("backbone")), k, identity_options, rng.split("model")
    )
    plain_options = config.variant_options()
    plain = build_model(
        "plain", Backbone(spec, rng.split("backbone")), k, plain_options, rng.split("model")
    )
    groups = ["backbone", "main_head"]
    x, labels = next(target.train.batches(config.optim.batch_size))
    losses = []
    for model in (gated, plain):
        model.zero_grad()
        losses.append(model.loss(model.forward(x, Mode.TRAIN), labels).total)
        model.backward()
    step_diff = max(abs(losses[0] - losses[1]), checks.max_grad_difference(gated, plain, groups))

    epochs = config.reproduce.bypass_epochs
    histories = []
    for model in (gated, plain):
        trainer = Trainer(
            model,
            config.train_config(epochs=epochs),
            rng.split("train"),
            protocol=FreezeProtocol(config.optim.freeze_epochs),
        )
        histories.append([s.loss for s in trainer.fit(target.train, target.val).history])
    trajectory_diff = max(abs(a - b) for a, b in zip(*histories, strict=True))
    param_diff = checks.max_param_difference(gated, plain, groups)
    value = max(step_diff, trajectory_diff, param_diff)
    return CriterionResult(
        2,
        "Bypass equivalence: identity-gate model matches the gate-free model bit for bit",
        value,
        0.0,
        value == 0.0,
        details={
            "step_difference": step_diff,
            "trajectory_difference": trajectory_diff,
            "parameter_difference": param_diff,
            "epochs": epochs,
        },
    )


def gate_range_and_shape(ctx: ReproduceContext) -> CriterionResult:
    r = ctx.config.reproduce
    violations = checks.gate_range_violations(Rng(ctx.seeds[0]).split("gate-range"), r.gate_draws)
    mismatches = checks.param_count_mismatches()
    return CriterionResult(
        3,
        "Gate range and shape: eval gates lie in [0,1]^C; parameter count matches the closed form",
        float(violations),
        0.0,
        violations == 0 and not mismatches,
        details={"draws": r.gate_draws, "count_mismatches": mismatches, "grid": checks.PARAM_GRID},
    )


def aux_loss_contract(ctx: ReproduceContext) -> CriterionResult:
    config = ctx.config
    seed = ctx.seeds[0]
    target = ctx.tasks(seed).target
    spec = config.backbone_spec(target.input_shape)
    rng = Rng(seed).split("aux-contract")
    k = target.num_classes
    with_aux = build_model(
        "gtn", Backbone(spec, rng.split("backbone")), k, config.variant_options(lam=0.2),
        rng.split("model"),
    )
    with_aux.lam = 0.0
    no_aux = build_model(
        "gtn", Backbone(spec, rng.split("backbone")), k, config.variant_options(lam=0.0),
        rng.split("model"),
    )
    x, labels = next(target.train.batches(config.optim.batch_size))
    for model in (with_aux, no_aux):
        model.set_dropout_rng(rng.split("dropout"))
        model.zero_grad()
        model.loss(model.forward(x, Mode.TRAIN, compute_aux=model is with_aux), labels)
        model.backward()
    diff = checks.max_grad_difference(with_aux, no_aux, ["backbone", "adapter", "main_head"])

    runs = lambda_runs(config.reproduce.lambdas)
    rows = []
    for seed in ctx.seeds:
        for run in runs:
            result = ctx.transfer(run.label, run.variant, seed, changes=run.changes)
            rows.append({"label": run.label, "seed": seed, **result.metrics()})
    table = aggregate(rows, [run.label for run in runs])
    write_table(table, ctx.run.path / "results" / "lambda_sweep.csv")
    return CriterionResult(
        4,
        "Aux-loss contract: lambda=0 reproduces no-aux gradients; lambda sweep report emitted",
        diff,
        0.0,
        diff == 0.0 and len(table) == len(runs),
        details={"table": table},
    )


def transfer_benefit(ctx: ReproduceContext) -> CriterionResult:
    margin = ctx.config.reproduce.transfer_margin
    acc: dict[str, list[float]] = {"gtn": [], "classic-ft": [], "fixed-feature": []}
    for seed in ctx.seeds:
        for variant in acc:
            acc[variant].append(ctx.transfer(variant, variant, seed).test.accuracy)
    means = {k: float(np.mean(v)) for k, v in acc.items()}
    value = means["gtn"] - means["classic-ft"]
    return CriterionResult(
        5,
        "Directional transfer benefit: GTN >= classic fine-tuning - margin and >= fixed features",
        value,
        -margin,
        value >= -margin and means["gtn"] >= means["fixed-feature"],
        details={"mean_accuracy": means, "per_seed": acc, "overlap": ctx.config.data.overlap},
    )


def domain_similarity(ctx: ReproduceContext) -> CriterionResult:
    r = ctx.config.reproduce
    gate_means: dict[str, list[float]] = {"low": [], "high": []}
    selectivity: dict[str, list[tuple[float, float]]] = {"low": [], "high": []}
    for seed in ctx.seeds:
        for tag, overlap in (("low", r.overlap_low), ("high", r.overlap_high)):
            result = ctx.transfer("gtn", "gtn", seed, overlap=overlap)
            target = ctx.tasks(seed, overlap).target
            gates = collect_gates(
                result.model,
                target.test,
                Rng(seed).split("gates"),
                samples=ctx.config.analysis.samples,
                batch_size=ctx.config.analysis.batch_size,
            )
            gate_means[tag].append(float(gates.mean()))
            selectivity[tag].append(informative_gate_means(result.model, target, gates))
    low, high = float(np.mean(gate_means["low"])), float(np.mean(gate_means["high"]))
    selective = {
        tag: [float(np.nanmean([p[0] for p in pairs])), float(np.nanmean([p[1] for p in pairs]))]
        for tag, pairs in selectivity.items()
    }
    ok_selective = all(inf > rest for inf, rest in selective.values())
    return CriterionResult(
        6,
        "Domain-similarity gating: mean gate on a similar target exceeds a dissimilar one",
        high - low,
        0.0,
        high > low and ok_selective,
        details={
            "mean_gate": {"low": low, "high": high},
            "informative_vs_rest": selective,
            "overlaps": [r.overlap_low, r.overlap_high],
        },
    )


def multiplication_vs_summation(ctx: ReproduceContext) -> CriterionResult:
    r = ctx.config.reproduce
    seed = ctx.seeds[0]
    epochs = ctx.config.optim.epochs
    presets = sorted({r.overlap_low, ctx.config.data.overlap, r.overlap_high})
    rows = []
    completed = True
    for overlap in presets:
        for label, variant in (("multiplication", "gtn"), ("summation", "residual")):
            result = ctx.transfer(label, variant, seed, overlap=overlap)
            losses = [s.loss for s in result.fit.history]
            completed &= len(losses) == epochs and all(math.isfinite(v) for v in losses)
            rows.append({"label": label, "seed": seed, "overlap": overlap, **result.metrics()})
    write_table(rows, ctx.run.path / "results" / "multiplication_vs_summation.csv")
    cases = checks.residual_cases()
    errors = checks.run_gradient_cases(cases, ctx.seeds)
    grads_ok = checks.gradient_verdict(
        cases, errors, r.gradcheck_tol, r.gradcheck_tol_deterministic
    )
    return CriterionResult(
        7,
        "Multiplication vs summation: both variants train on every preset and pass grad checks",
        max(errors.values()),
        r.gradcheck_tol,
        completed and grads_ok,
        details={"presets": presets, "errors": errors, "runs": rows},
    )


def learning_without_forgetting(ctx: ReproduceContext) -> CriterionResult:
    margin = ctx.config.reproduce.lwf_margin
    rows: dict[str, list[float]] = {"oracle": [], "gtn": [], "classic-ft": []}
    oracle_matches = True
    for seed in ctx.seeds:
        source = ctx.source(seed)
        splits = ctx.tasks(seed).source
        oracle = evaluate_checkpoint(source.checkpoint, splits, ctx.config.optim.eval_batch_size)
        oracle_matches &= oracle["test"].accuracy == source.test.accuracy
        rows["oracle"].append(oracle["test"].accuracy)
        for variant in ("gtn", "classic-ft"):
            transferred = ctx.transfer(variant, variant, seed)
            out = ctx.run.sub("lwf", f"seed-{seed}", variant)
            relearned = relearn_source(ctx.config, seed, transferred.checkpoint, splits, out)
            rows[variant].append(relearned.test.accuracy)
    means = {k: float(np.mean(v)) for k, v in rows.items()}
    gap = means["oracle"] - means["gtn"]
    return CriterionResult(
        8,
        "Learning without forgetting: relearned source accuracy within margin of the oracle",
        gap,
        margin,
        gap <= margin and oracle_matches,
        details={"mean_accuracy": means, "per_seed": rows, "oracle_matches": oracle_matches},
    )


def analysis_correctness(ctx: ReproduceContext) -> CriterionResult:
    tol = ctx.config.reproduce.analysis_tol
    seed = ctx.seeds[0]
    deviation, conserved = checks.analysis_deviation(Rng(seed).split("analysis"))
    target = ctx.tasks(seed).target
    rng = Rng(seed).split("identity-gates")
    model = build_model(
        "classic-ft",
        Backbone(ctx.config.backbone_spec(target.input_shape), rng.split("backbone")),
        target.num_classes,
        ctx.config.variant_options(),
        rng.split("model"),
    )
    samples = ctx.config.analysis.samples
    gates = collect_gates(model, target.test, rng.split("collect"), samples=samples)
    hist = histogram_gates(gates)
    identity_ok = int(hist[9]) == gates.size
    return CriterionResult(
        9,
        "Analysis correctness: histogram, statistics and sparsity match naive oracles",
        deviation,
        tol,
        deviation <= tol and conserved and identity_ok,
        details={"conserved": conserved, "identity_bin9_fraction": float(hist[9] / gates.size)},
    )


def _snapshot(root: Path) -> dict[str, bytes]:
    files = sorted(p for p in root.rglob("*") if p.is_file())
    return {str(p.relative_to(root)): p.read_bytes() for p in files}


def determinism(ctx: ReproduceContext) -> CriterionResult:
    seed = ctx.seeds[0]
    epochs = min(2, ctx.config.optim.epochs) or 1
    snapshots = []
    for attempt in ("a", "b"):
        out = ctx.run.sub("determinism", attempt)
        tasks = load_tasks(ctx.config, seed)
        source = pretrain_source(ctx.config, seed, tasks.source, out / "pretrain", epochs=epochs)
        transfer_target(
            ctx.config,
            seed,
            tasks.target,
            source.checkpoint,
            out / "gtn",
            variant="gtn",
            epochs=epochs,
        )
        snapshots.append(_snapshot(out))
    first, second = snapshots
    differing = sorted(k for k in first.keys() | second.keys() if first.get(k) != second.get(k))
    return CriterionResult(
        10,
        "Determinism: a rerun with the same config and seed produces identical files",
        float(len(differing)),
        0.0,
        not differing,
        details={"files": len(first), "differing": differing},
    )


CRITERIA: dict[int, Callable[[ReproduceContext], CriterionResult]] = {
    1: gradient_correctness,
    2: bypass_equivalence,
    3: gate_range_and_shape,
    4: aux_loss_contract,
    5: transfer_benefit,
    6: domain_similarity,
    7: multiplication_vs_summation,
    8: learning_without_forgetting,
    9: analysis_correctness,
    10: determinism,
}


def _summary_text(results: list[CriterionResult]) -> str:
    lines = [
        f"{'id':>3}  {'result':<6}  {'value':>12}  {'threshold':>12}  {'time':>8}  description"
    ]
    for res in results:
        lines.append(
            f"{res.criterion_id:>3}  {'PASS' if res.passed else 'FAIL':<6}  {res.value:>12.6g}  "
            f"{res.threshold:>12.6g}  {res.runtime_s:>7.1f}s  {res.description}"
        )
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"


def run_reproduce(config: ExperimentConfig, run: RunDirectory) -> list[CriterionResult]:
    """Run the selected criteria in order and write the pass/fail summary."""
    ctx = ReproduceContext(config, run)
    results = []
    for criterion_id in config.reproduce.criteria:
        started = time.perf_counter()
        result = CRITERIA[criterion_id](ctx)
        result.runtime_s = time.perf_counter() - started
        results.append(result)
        logger.log(
            logging.INFO if result.passed else logging.WARNING,
            "Criterion %d %s (value=%.6g, threshold=%.6g)",
            criterion_id,
            "passed" if result.passed else "failed",
            result.value,
            result.threshold,
            extra={"criterion": criterion_id},
        )
    run.write_json(SUMMARY_JSON, [r.to_dict() for r in results])
    (run.path / SUMMARY_TXT).write_text(_summary_text(results), encoding="utf-8")
    return results
