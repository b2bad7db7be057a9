"""Verification helpers behind the reproduce criteria."""
from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from gtn.analysis import feature_stats, histogram_gates, sparsity
from gtn.layers import (
    BatchNorm1dLayer,
    Conv2dLayer,
    DropoutLayer,
    GlobalAvgPool,
    LinearLayer,
    MaxPool2d,
    ReLU,
    Sigmoid,
    grad_check,
)
from gtn.layers.base import Mode
from gtn.layers.gradcheck import Differentiable
from gtn.model import Backbone, BackboneSpec, GtnModel, ModelObjective, VariantOptions, build_model
from gtn.tensor import Rng, Tensor
from gtn.transfer import GateVariant, TransferModule


@dataclass(frozen=True)
class GradientCase:
    name: str
    build: Callable[[Rng], Differentiable]
    input_shape: tuple[int, ...]
    mode: Mode = Mode.EVAL
    strict: bool = True


def _model_case(variant: str, rng: Rng) -> Differentiable:
    spec = BackboneSpec(input_shape=(6,), widths=(8, 8))
    model = build_model(
        variant,
        Backbone(spec, rng.split("backbone")),
        3,
        VariantOptions(lam=0.2, reduction=2),
        rng.split("model"),
    )
    labels = rng.split("labels").integers(0, 3, 4)
    return ModelObjective(model, labels, compute_aux=True)


def layer_cases() -> list[GradientCase]:
    return [
        GradientCase("linear", lambda r: LinearLayer(5, 4, rng=r), (3, 5)),
        GradientCase("relu", lambda r: ReLU(), (3, 6)),
        GradientCase("sigmoid", lambda r: Sigmoid(), (3, 6)),
        GradientCase("conv", lambda r: Conv2dLayer(2, 3, 3, padding=1, rng=r), (2, 2, 5, 5)),
        GradientCase("maxpool", lambda r: MaxPool2d(2), (2, 2, 4, 4)),
        GradientCase("gap", lambda r: GlobalAvgPool(), (2, 3, 4, 4)),
        GradientCase("batchnorm-train", lambda r: BatchNorm1dLayer(4), (6, 4), Mode.TRAIN),
        GradientCase("batchnorm-eval", lambda r: BatchNorm1dLayer(4), (6, 4)),
        GradientCase("dropout", lambda r: DropoutLayer(0.5, r), (4, 6), Mode.TRAIN, False),
        GradientCase("dropout-eval", lambda r: DropoutLayer(0.5, r), (4, 6)),
        GradientCase("transfer", lambda r: TransferModule(8, reduction=2, rng=r), (4, 8)),
        GradientCase(
            "transfer-train",
            lambda r: TransferModule(8, reduction=2, rng=r),
            (4, 8),
            Mode.TRAIN,
            False,
        ),
        GradientCase("model", lambda r: _model_case("gtn", r), (4, 6), strict=False),
    ]


def residual_cases() -> list[GradientCase]:
    def module(r: Rng) -> TransferModule:
        return TransferModule(8, reduction=2, variant=GateVariant.RESIDUAL, rng=r)

    return [
        GradientCase("residual", module, (4, 8)),
        GradientCase("residual-train", module, (4, 8), Mode.TRAIN, False),
        GradientCase(
            "residual-model", lambda r: _model_case("residual", r), (4, 6), strict=False
        ),
    ]


def run_gradient_cases(cases: list[GradientCase], seeds: list[int]) -> dict[str, float]:
    """Worst relative error per case over ``seeds``."""
    worst: dict[str, float] = {}
    for seed in seeds:
        rng = Rng(seed).split("gradcheck")
        for case in cases:
            target = case.build(rng.split(f"{case.name}.init"))
            check_rng = rng.split(f"{case.name}.check")
            err = grad_check(target, case.input_shape, check_rng, mode=case.mode)
            worst[case.name] = max(worst.get(case.name, 0.0), err)
    return worst


def gradient_verdict(
    cases: list[GradientCase], errors: dict[str, float], tol: float, tol_deterministic: float
) -> bool:
    return all(
        errors[c.name] < (tol_deterministic if c.strict else tol) for c in cases
    )


def closed_form_param_count(channels: int, reduction: int) -> int:
    hidden = max(1, math.ceil(channels / reduction))
    return 2 * channels * hidden + hidden + channels


PARAM_GRID = ((2048, 16), (512, 16), (64, 16), (100, 16), (33, 8), (10, 3), (7, 4), (1, 16))


def param_count_mismatches() -> list[tuple[int, int]]:
    bad = []
    for channels, reduction in PARAM_GRID:
        module = TransferModule(channels, reduction=reduction)
        if sum(p.size for p in module.parameters()) != closed_form_param_count(channels, reduction):
            bad.append((channels, reduction))
    return bad


def gate_range_violations(rng: Rng, draws: int, channels: int = 32, batch: int = 100) -> int:
    """Out-of-range or misshaped eval gates over ``draws`` random (input, parameter) pairs."""
    violations = 0
    for i in range(math.ceil(draws / batch)):
        n = min(batch, draws - i * batch)
        stream = rng.split(f"draw{i}")
        module = TransferModule(channels, reduction=4, rng=stream.split("init"))
        for j, param in enumerate(module.parameters()):
            param.data[...] = 3.0 * stream.split(f"param{j}").normal(param.shape)
        x = 5.0 * stream.split("input").normal((n, channels))
        _, gate = module.gate_forward(Tensor.wrap(x), Mode.EVAL)
        g = gate.array
        if g.shape != (n, channels):
            violations += n
            continue
        violations += int(np.count_nonzero(((g < 0.0) | (g > 1.0)).any(axis=1)))
    return violations


# -- naive oracles for the analysis functions ---------------------------------


def naive_histogram(gates: np.ndarray) -> list[int]:
    bins = [0] * 10
    for value in gates.ravel():
        index = 9
        for i in range(10):
            if value < (i + 1) / 10:
                index = i
                break
        bins[index] += 1
    return bins


def naive_stats(gates: np.ndarray) -> tuple[list[float], list[float]]:
    n, c = gates.shape
    means, stds = [], []
    for j in range(c):
        total = 0.0
        for i in range(n):
            total += gates[i, j]
        mean = total / n
        sq = 0.0
        for i in range(n):
            sq += (gates[i, j] - mean) ** 2
        means.append(mean)
        stds.append(math.sqrt(sq / n))
    return means, stds


def naive_sparsity(gates: np.ndarray, threshold: float) -> float:
    below = sum(1 for v in gates.ravel() if v < threshold)
    return below / gates.size


def analysis_deviation(rng: Rng, trials: int = 5) -> tuple[float, bool]:
    """Max deviation of the vectorized statistics from naive loops, and histogram conservation."""
    worst = 0.0
    conserved = True
    for t in range(trials):
        stream = rng.split(f"trial{t}")
        n = 2 + int(stream.integers(0, 60, 1)[0])
        c = 1 + int(stream.integers(0, 40, 1)[0])
        gates = stream.uniform((n, c))
        hist = histogram_gates(gates)
        conserved &= int(hist.sum()) == n * c
        worst = max(worst, float(np.max(np.abs(hist - np.array(naive_histogram(gates))))))
        mean, std = feature_stats(gates)
        n_mean, n_std = naive_stats(gates)
        worst = max(worst, float(np.max(np.abs(mean - n_mean))), float(np.max(np.abs(std - n_std))))
        for threshold in (0.1, 0.3, 0.5, 0.7, 0.9):
            worst = max(worst, abs(sparsity(gates, threshold) - naive_sparsity(gates, threshold)))
    return worst, conserved


def max_param_difference(a: GtnModel, b: GtnModel, groups: list[str]) -> float:
    worst = 0.0
    for pa, pb in zip(a.parameters(groups), b.parameters(groups), strict=True):
        worst = max(worst, float(np.max(np.abs(pa.data - pb.data))) if pa.size else 0.0)
    return worst


def max_grad_difference(a: GtnModel, b: GtnModel, groups: list[str]) -> float:
    worst = 0.0
    for pa, pb in zip(a.parameters(groups), b.parameters(groups), strict=True):
        worst = max(worst, float(np.max(np.abs(pa.grad - pb.grad))) if pa.size else 0.0)
    return worst
