from gtn.optim.protocol import NO_FREEZE, FreezeProtocol
from gtn.optim.schedule import PlateauSchedule, lr_trace, schedule_step
from gtn.optim.sgd import Sgd, SgdState, sgd_step
from gtn.optim.trainer import (
    EpochStats,
    EvalResult,
    FitResult,
    TrainConfig,
    Trainer,
    evaluate,
    train_epoch,
)

__all__ = [
    "NO_FREEZE",
    "EpochStats",
    "EvalResult",
    "FitResult",
    "FreezeProtocol",
    "PlateauSchedule",
    "Sgd",
    "SgdState",
    "TrainConfig",
    "Trainer",
    "evaluate",
    "lr_trace",
    "schedule_step",
    "sgd_step",
    "train_epoch",
]
