"""Epoch bookkeeping: reduce-LR-on-plateau, early stopping and best-checkpointing.

All three read the same improvement signal: an epoch improves when its
validation loss is strictly below best - min_delta.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from dataio.weights import save_weights
from zoo.graph import ModelSpec
from zoo.params import ParamStore

from .config import TrainConfig
from .history import EpochRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainState:
    lr: float
    epoch: int = 0
    plateau_wait: int = 0
    best_val_loss: float = math.inf
    best_epoch: int = 0
    checkpoint_epoch: int | None = None
    history: tuple[EpochRecord, ...] = field(default_factory=tuple)

    @property
    def epochs_since_best(self) -> int:
        return self.epoch - self.best_epoch

    @property
    def improved(self) -> bool:
        """True when the most recent epoch set a new best."""
        return self.epoch > 0 and self.best_epoch == self.epoch


def initial_state(config: TrainConfig) -> TrainState:
    return TrainState(lr=config.learning_rate)


def plateau_update(state: TrainState, epoch_val_loss: float, config: TrainConfig | None = None) -> TrainState:
    """Close one epoch: track the best loss and cut the lr after `plateau_patience` stagnant epochs."""
    config = config or TrainConfig()
    epoch = state.epoch + 1
    if epoch_val_loss < state.best_val_loss - config.min_delta:
        return replace(state, epoch=epoch, plateau_wait=0, best_val_loss=float(epoch_val_loss), best_epoch=epoch)
    wait = state.plateau_wait + 1
    lr = state.lr
    if wait >= config.plateau_patience:
        lr = max(state.lr * config.plateau_factor, config.min_lr)
        wait = 0
        if lr < state.lr:
            logger.info("Epoch %d: reducing learning rate %.3g -> %.3g", epoch, state.lr, lr)
    return replace(state, epoch=epoch, plateau_wait=wait, lr=lr)


def early_stop_check(state: TrainState, patience: int) -> bool:
    return state.epochs_since_best >= patience


def checkpoint_if_best(
    state: TrainState,
    params: ParamStore,
    path: str | Path | None,
    model: ModelSpec | None = None,
) -> TrainState:
    """Persist params when the latest epoch improved; the file always holds the best epoch so far."""
    if not state.improved:
        return state
    if path is not None:
        save_weights(params, path, model)
        logger.info("Epoch %d: val loss %.4f is the best so far, checkpoint written to %s", state.epoch, state.best_val_loss, path)
    return replace(state, checkpoint_epoch=state.epoch)


def record_epoch(state: TrainState, record: EpochRecord) -> TrainState:
    return replace(state, history=state.history + (record,))
