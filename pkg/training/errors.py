"""Training failure categories."""

from __future__ import annotations

from engine.errors import BanknoteError


class NumericalError(BanknoteError, RuntimeError):
    """A batch produced a non-finite loss or gradient."""

    def __init__(self, epoch: int, batch_index: int, detail: str = "non-finite loss") -> None:
        super().__init__(f"{detail} at epoch {epoch}, batch {batch_index}")
        self.epoch = epoch
        self.batch_index = batch_index
