"""Command-line entry point: ``gtn <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from functools import partial
from pathlib import Path
from typing import Any

import orjson
import yaml

from gtn.analysis import (
    build_report,
    collect_gates,
    compare_reports,
    export_features,
    read_report,
    write_comparison,
    write_report,
)
from gtn.config import (
    ConfigValidationError,
    ExperimentConfig,
    ExperimentConfigLoader,
    get_settings,
    leaf_keys,
    parse_override,
)
from gtn.data import save_dataset
from gtn.errors import GtnError
from gtn.experiments import (
    RunDirectory,
    evaluate_checkpoint,
    list_supported_sweeps,
    load_tasks,
    pretrain_source,
    relearn_source,
    run_reproduce,
    run_seeds,
    run_sweep,
    transfer_target,
)
from gtn.logging import configure_logging
from gtn.model import load_model
from gtn.tensor import Rng

logger = logging.getLogger(__name__)

_CONFIG_PREFIX = "cfg:"


def _emit(args: argparse.Namespace, payload: Any, lines: list[str]) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2).decode() + "\n")
    else:
        for line in lines:
            print(line)


def _seed_path(template: str, seed: int) -> Path:
    return Path(template.format(seed=seed))


def load_config(args: argparse.Namespace) -> tuple[ExperimentConfig, str]:
    """Resolve the experiment config; precedence is flag > file > default."""
    loader = ExperimentConfigLoader(get_settings().config_dir)
    overrides: dict[str, Any] = {}
    for item in getattr(args, "set", None) or []:
        key, value = parse_override(item)
        overrides[key] = value
    for dest, raw in sorted(vars(args).items()):
        if dest.startswith(_CONFIG_PREFIX):
            overrides[dest[len(_CONFIG_PREFIX) :]] = yaml.safe_load(raw)
    if getattr(args, "seeds", None):
        overrides["seeds"] = [int(s) for s in str(args.seeds).split(",") if s.strip()]
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = [args.seed]
    if getattr(args, "output_dir", None):
        overrides["output_dir"] = args.output_dir
    if getattr(args, "jobs", None):
        overrides["jobs"] = args.jobs
    path = getattr(args, "config", None)
    config = loader.load(path, overrides)
    return config, loader.read_text(path)


def _run_dir(config: ExperimentConfig, text: str) -> RunDirectory:
    return RunDirectory.create(config.output_dir, config, config_text=text)


# -- subcommands ----------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    config, text = load_config(args)
    run = _run_dir(config, text)
    seed = config.seeds[0]
    tasks = load_tasks(config, seed)
    save_dataset(tasks.source, run.path / "source")
    save_dataset(tasks.target, run.path / "target")
    if tasks.layout is not None:
        run.write_json("layout.json", tasks.layout.to_dict())
    _emit(
        args,
        {"source": tasks.source.train.summary(), "target": tasks.target.train.summary()},
        [f"Wrote source and target datasets for seed {seed} to {run.path}"],
    )
    return 0


def _pretrain_seed(config: ExperimentConfig, root: Path, seed: int) -> dict[str, Any]:
    tasks = load_tasks(config, seed)
    result = pretrain_source(config, seed, tasks.source, root / f"seed-{seed}")
    return {"seed": seed, **result.metrics(), "checkpoint": str(result.checkpoint)}


def cmd_pretrain(args: argparse.Namespace) -> int:
    config, text = load_config(args)
    run = _run_dir(config, text)
    fn = partial(_pretrain_seed, config, run.path)
    rows = [row for _, row in run_seeds(fn, config.seeds, config.jobs)]
    run.write_json("pretrain.json", rows)
    _emit(
        args,
        rows,
        [
            f"seed {r['seed']}: source test accuracy {r['test_accuracy']:.4f} -> {r['checkpoint']}"
            for r in rows
        ],
    )
    return 0


def _transfer_seed(
    config: ExperimentConfig, root: Path, source: str, seed: int
) -> dict[str, Any]:
    tasks = load_tasks(config, seed)
    result = transfer_target(
        config, seed, tasks.target, _seed_path(source, seed), root / f"seed-{seed}"
    )
    return {"seed": seed, **result.metrics(), "checkpoint": str(result.checkpoint)}


def cmd_transfer(args: argparse.Namespace) -> int:
    config, text = load_config(args)
    run = _run_dir(config, text)
    fn = partial(_transfer_seed, config, run.path, args.source)
    rows = [row for _, row in run_seeds(fn, config.seeds, config.jobs)]
    run.write_json("transfer.json", rows)
    _emit(
        args,
        rows,
        [
            f"seed {r['seed']}: {r['variant']} target test accuracy {r['test_accuracy']:.4f}"
            for r in rows
        ],
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config, _ = load_config(args)
    seed = config.seeds[0]
    tasks = load_tasks(config, seed)
    splits = tasks.source if args.task == "source" else tasks.target
    checkpoint = _seed_path(args.checkpoint, seed)
    results = evaluate_checkpoint(checkpoint, splits, config.optim.eval_batch_size)
    payload = {
        split: {"loss": r.loss, "accuracy": r.accuracy, "count": r.count}
        for split, r in results.items()
    }
    _emit(
        args,
        payload,
        [
            f"{split}: accuracy {r.accuracy:.4f} loss {r.loss:.4f} (n={r.count})"
            for split, r in results.items()
        ],
    )
    return 0


def _lwf_seed(
    config: ExperimentConfig,
    root: Path,
    source: str,
    target: str,
    baseline: str | None,
    seed: int,
) -> dict[str, Any]:
    splits = load_tasks(config, seed).source
    batch = config.optim.eval_batch_size
    row: dict[str, Any] = {
        "seed": seed,
        "oracle": evaluate_checkpoint(_seed_path(source, seed), splits, batch)["test"].accuracy,
    }
    candidates = {"gtn": target, "classic-ft": baseline}
    for label, checkpoint in candidates.items():
        if checkpoint is None:
            continue
        out = root / f"seed-{seed}" / label
        relearned = relearn_source(config, seed, _seed_path(checkpoint, seed), splits, out)
        row[label] = relearned.test.accuracy
    return row


def cmd_lwf(args: argparse.Namespace) -> int:
    config, text = load_config(args)
    run = _run_dir(config, text)
    fn = partial(_lwf_seed, config, run.path, args.source, args.target, args.baseline)
    rows = [row for _, row in run_seeds(fn, config.seeds, config.jobs)]
    run.write_json("lwf_report.json", {"epochs": config.optim.lwf_epochs, "rows": rows})
    lines = []
    for row in rows:
        cells = ", ".join(f"{k}={v:.4f}" for k, v in row.items() if k != "seed")
        lines.append(f"seed {row['seed']}: source accuracy {cells}")
    _emit(args, rows, lines)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    config, text = load_config(args)
    run = _run_dir(config, text)
    seed = config.seeds[0]
    model = load_model(_seed_path(args.checkpoint, seed))
    splits = load_tasks(config, seed).target
    gates = collect_gates(
        model,
        splits.test,
        Rng(seed).split("gates"),
        samples=config.analysis.samples,
        batch_size=config.analysis.batch_size,
    )
    report = build_report(
        gates,
        model=model,
        model_id=str(args.checkpoint),
        dataset_id=splits.test.name,
        thresholds=config.analysis.thresholds,
    )
    write_report(report, run.path)
    if config.analysis.export_features:
        features = run.path / "features.csv"
        export_features(model, splits.test, features, config.optim.eval_batch_size)
    if args.compare:
        reports = {"current": report}
        reports.update({str(p): read_report(p) for p in args.compare})
        write_comparison(compare_reports(reports), run.path / "comparison.csv")
    _emit(
        args,
        report.model_dump(),
        [
            f"gate mean {report.gate_mean:.4f} over {report.samples} x {report.channels}",
            "histogram " + " ".join(str(c) for c in report.histogram),
            "sparsity " + " ".join(f"{k}:{v:.3f}" for k, v in report.sparsity.items()),
        ],
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config, text = load_config(args)
    run = _run_dir(config, text)
    table = run_sweep(args.kind, config, run)
    lines = [
        f"{row['label']:<20} acc {row['accuracy_mean']:.4f} +- {row['accuracy_std']:.4f}  "
        f"epochs-to-best {row['epochs_to_best_mean']:.1f}"
        for row in table
    ]
    _emit(args, table, lines)
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    config, text = load_config(args)
    run = _run_dir(config, text)
    results = run_reproduce(config, run)
    _emit(
        args,
        [r.to_dict() for r in results],
        [
            f"[{'PASS' if r.passed else 'FAIL'}] {r.criterion_id:>2} {r.description} "
            f"(value={r.value:.6g}, threshold={r.threshold:.6g}, {r.runtime_s:.1f}s)"
            for r in results
        ],
    )
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    config_keys = [key for key in leaf_keys() if "." in key]

    def add_shared(p: argparse.ArgumentParser) -> None:
        # Shared flags live on the main parser and on every subparser; SUPPRESS keeps a
        # value given before the subcommand from being reset after it.
        p.add_argument("--config", default=argparse.SUPPRESS, help="Experiment config (YAML)")
        p.add_argument("--output-dir", default=argparse.SUPPRESS, help="Run directory")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Single seed")
        p.add_argument("--seeds", default=argparse.SUPPRESS, help="Comma-separated seed list")
        p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="Worker processes")
        p.add_argument(
            "--set",
            action="append",
            default=argparse.SUPPRESS,
            metavar="KEY=VALUE",
            help="Override a config key, e.g. optim.lr=0.001 (repeatable)",
        )
        p.add_argument("--log-level", default=argparse.SUPPRESS, help="Logging level")
        p.add_argument(
            "--json", action="store_true", default=argparse.SUPPRESS, help="Emit JSON output"
        )

    def add_config_flags(p: argparse.ArgumentParser) -> None:
        group = p.add_argument_group("config keys")
        for key in config_keys:
            group.add_argument(
                f"--{key}",
                dest=f"{_CONFIG_PREFIX}{key}",
                default=argparse.SUPPRESS,
                metavar="VALUE",
            )

    parser = argparse.ArgumentParser(prog="gtn", description="Gated transfer network experiments")
    add_shared(parser)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def command(name: str, func: Any, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        add_shared(p)
        add_config_flags(p)
        p.set_defaults(func=func)
        return p

    command("generate", cmd_generate, "Write the synthetic source/target datasets")
    command("pretrain", cmd_pretrain, "Train backbone + classifier on the source task")

    p_transfer = command("transfer", cmd_transfer, "Fine-tune a pretrained backbone on the target")
    p_transfer.add_argument(
        "--source", required=True, help="Source checkpoint directory ({seed} is substituted)"
    )

    p_eval = command("eval", cmd_eval, "Evaluate a checkpoint on every split")
    p_eval.add_argument("--checkpoint", required=True, help="Model checkpoint directory")
    p_eval.add_argument("--task", choices=("source", "target"), default="target")

    p_lwf = command("lwf", cmd_lwf, "Relearn the source task through a transferred model")
    p_lwf.add_argument("--source", required=True, help="Source (oracle) checkpoint")
    p_lwf.add_argument("--target", required=True, help="Transferred GTN checkpoint")
    p_lwf.add_argument("--baseline", default=None, help="Transferred classic-ft checkpoint")

    p_analyze = command("analyze", cmd_analyze, "Gate report and feature export for a checkpoint")
    p_analyze.add_argument("--checkpoint", required=True, help="Model checkpoint directory")
    p_analyze.add_argument(
        "--compare", nargs="*", default=[], help="Other gate reports to tabulate"
    )

    p_sweep = command("sweep", cmd_sweep, "Multi-seed ablation sweep")
    p_sweep.add_argument("kind", choices=list_supported_sweeps())

    command("reproduce", cmd_reproduce, "Run the acceptance suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    settings = get_settings()
    configure_logging(getattr(args, "log_level", settings.log_level).upper(), settings.log_format)

    try:
        return int(args.func(args))
    except ConfigValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except GtnError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
