from __future__ import annotations

import logging
from dataclasses import dataclass

from gtn.model.network import GtnModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FreezeProtocol:
    """Freeze-then-joint fine-tuning.

    For the first ``freeze_epochs`` epochs the ``groups`` (the pretrained
    backbone) receive no updates while the new modules train; afterwards
    every group trains at the same learning rate. Groups a variant keeps
    frozen permanently stay frozen.
    """

    freeze_epochs: int = 5
    groups: tuple[str, ...] = ("backbone",)

    def __post_init__(self) -> None:
        if self.freeze_epochs < 0:
            raise ValueError(f"freeze_epochs must be >= 0, got {self.freeze_epochs}")

    def in_freeze_phase(self, epoch: int) -> bool:
        return epoch < self.freeze_epochs

    def apply(self, model: GtnModel, epoch: int) -> bool:
        """Set the freeze state for ``epoch`` (0-based); return True while frozen."""
        frozen = self.in_freeze_phase(epoch)
        for group in self.groups:
            if frozen:
                model.freeze(group)
            else:
                model.unfreeze(group)
        if epoch == self.freeze_epochs and self.freeze_epochs > 0:
            logger.info(
                "Freeze phase over at epoch %d; joint training", epoch, extra={"epoch": epoch}
            )
        return frozen


NO_FREEZE = FreezeProtocol(freeze_epochs=0)
