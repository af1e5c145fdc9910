"""Training machinery: Adam, plateau schedule, early stopping, checkpoints, the epoch loop."""

from .config import TrainConfig
from .errors import NumericalError
from .history import EpochRecord, plot_history, read_history_table, write_history_table
from .loop import FitResult, TrainingData, evaluate, fit, one_hot
from .optim import AdamState, adam_step
from .schedule import TrainState, checkpoint_if_best, early_stop_check, initial_state, plateau_update, record_epoch

__all__ = [
    "TrainConfig",
    "NumericalError",
    "EpochRecord",
    "plot_history",
    "read_history_table",
    "write_history_table",
    "FitResult",
    "TrainingData",
    "evaluate",
    "fit",
    "one_hot",
    "AdamState",
    "adam_step",
    "TrainState",
    "checkpoint_if_best",
    "early_stop_check",
    "initial_state",
    "plateau_update",
    "record_epoch",
]
