from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


@dataclass
class PlateauSchedule:
    """Divide the learning rate by ``1 / factor`` when the validation error stalls.

    An epoch improves when its error is below the best seen so far by more
    than ``min_delta``. After ``patience`` consecutive epochs without
    improvement the rate is multiplied by ``factor`` (never below ``min_lr``)
    and the wait counter restarts.
    """

    initial_lr: float = 0.01
    factor: float = 0.1
    patience: int = 3
    min_delta: float = 1e-4
    min_lr: float = 1e-5
    lr: float = field(init=False)
    best: float = field(init=False, default=float("inf"))
    wait: int = field(init=False, default=0)
    triggers: int = field(init=False, default=0)
    seen: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        if not 0 < self.factor < 1:
            raise ValueError(f"factor must be in (0, 1), got {self.factor}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        self.lr = self.initial_lr

    def observe(self, metric: float) -> float:
        self.seen += 1
        if metric < self.best - self.min_delta:
            self.best = metric
            self.wait = 0
            return self.lr
        self.wait += 1
        if self.wait >= self.patience:
            new_lr = max(self.lr * self.factor, self.min_lr)
            if new_lr < self.lr:
                self.triggers += 1
                logger.info("Validation plateau: lr %.3g -> %.3g", self.lr, new_lr)
            self.lr = new_lr
            self.wait = 0
        return self.lr


def schedule_step(sched: PlateauSchedule, history: Sequence[float]) -> float:
    """Feed the not-yet-seen tail of ``history`` to ``sched``; return the new rate."""
    if not history:
        raise ValueError("schedule_step needs a non-empty metric history")
    for metric in history[sched.seen :]:
        sched.observe(float(metric))
    return sched.lr


def lr_trace(sched: PlateauSchedule, history: Sequence[float]) -> list[float]:
    """Distinct learning rates in the order they were used while replaying ``history``."""
    trace = [sched.lr]
    for metric in history:
        lr = sched.observe(float(metric))
        if lr != trace[-1]:
            trace.append(lr)
    return trace
