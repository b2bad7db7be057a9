"""Pretraining, transfer, relearning, sweeps and the acceptance suite."""
from gtn.experiments.pipeline import (
    StageResult,
    TaskPair,
    evaluate_checkpoint,
    gate_report,
    load_tasks,
    pretrain_source,
    relearn_source,
    transfer_target,
)
from gtn.experiments.reproduce import CRITERIA, CriterionResult, run_reproduce
from gtn.experiments.rundir import RunDirectory, version_string
from gtn.experiments.sweeps import (
    SWEEPS,
    VariantRun,
    list_supported_sweeps,
    run_seeds,
    run_sweep,
)

__all__ = [
    "CRITERIA",
    "SWEEPS",
    "CriterionResult",
    "RunDirectory",
    "StageResult",
    "TaskPair",
    "VariantRun",
    "evaluate_checkpoint",
    "gate_report",
    "list_supported_sweeps",
    "load_tasks",
    "pretrain_source",
    "relearn_source",
    "run_reproduce",
    "run_seeds",
    "run_sweep",
    "transfer_target",
    "version_string",
]
