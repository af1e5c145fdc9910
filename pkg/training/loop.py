"""The training loop: shuffled augmented batches, Adam, plateau/early-stop/checkpoint per epoch."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from augment.config import AugmentConfig, AugmentMode
from augment.pipeline import augment_arrays
from augment.rng import make_rng
from dataio.dataset import DatasetManifest, LabeledImage, Split, split_arrays
from dataio.errors import DatasetError
from dataio.weights import load_weights
from engine.errors import ShapeMismatchError
from engine.ops import cross_entropy
from zoo.graph import ModelSpec
from zoo.network import Network
from zoo.params import FreezeScope, ParamStore, set_frozen

from .config import TrainConfig
from .errors import NumericalError
from .history import EpochRecord, write_history_table
from .optim import AdamState, adam_step
from .schedule import (
    TrainState,
    checkpoint_if_best,
    early_stop_check,
    initial_state,
    plateau_update,
    record_epoch,
)

logger = logging.getLogger(__name__)


@dataclass
class TrainingData:
    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    class_names: list[str]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @classmethod
    def from_manifest(cls, manifest: DatasetManifest, items: Sequence[LabeledImage]) -> "TrainingData":
        x_train, y_train = split_arrays(manifest, items, Split.TRAIN)
        x_val, y_val = split_arrays(manifest, items, Split.VAL)
        return cls(x_train, y_train, x_val, y_val, list(manifest.class_names))


@dataclass
class FitResult:
    best_params: ParamStore
    state: TrainState

    @property
    def history(self) -> list[EpochRecord]:
        return list(self.state.history)


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), num_classes), dtype=np.float32)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def evaluate(
    network: Network,
    params: ParamStore,
    x: np.ndarray,
    y: np.ndarray,
    batch_size: int = 32,
) -> tuple[float, float, np.ndarray]:
    """(mean cross-entropy, accuracy, argmax predictions) over un-augmented inputs."""
    if len(x) == 0:
        raise DatasetError("cannot evaluate on an empty split")
    probs = network.predict_proba(x, params, batch_size)
    labels = np.asarray(y, dtype=np.int64)
    loss = float(np.mean(cross_entropy(probs, one_hot(labels, probs.shape[-1]))))
    predictions = np.argmax(probs, axis=-1)
    accuracy = float(np.count_nonzero(predictions == labels)) / len(labels)
    return loss, accuracy, predictions


def _check_inputs(model: ModelSpec, data: TrainingData) -> None:
    if len(data.x_train) == 0 or len(data.x_val) == 0:
        raise DatasetError(f"need non-empty train and val splits, got {len(data.x_train)} and {len(data.x_val)}")
    classes = model.output_shape[-1]
    if classes != data.num_classes:
        raise ShapeMismatchError("model output classes vs dataset classes", (data.num_classes,), (classes,))


def fit(
    model: ModelSpec,
    params: ParamStore,
    data: TrainingData,
    augment_config: AugmentConfig,
    config: TrainConfig,
) -> FitResult:
    """Train until max_epochs or early stopping; return the lowest-val-loss parameters.

    Each epoch: seeded shuffle, batches of `batch_size` (last partial batch
    kept) augmented per `augment_mode`, Adam steps, un-augmented validation,
    then plateau update, checkpoint and early-stop check.
    """
    _check_inputs(model, data)
    params.check_against(model)
    if config.freeze_backbone:
        params = set_frozen(params, model, FreezeScope.BACKBONE)
    network = Network(model)
    num_classes = data.num_classes

    x_train, y_train = data.x_train, data.y_train
    source_index = np.arange(len(x_train))
    if config.augment_mode is AugmentMode.OFFLINE:
        x_train, y_train = augment_arrays(
            x_train, y_train, augment_config, config.seed, mode=AugmentMode.OFFLINE, workers=config.workers
        )
        source_index = np.arange(len(x_train))

    adam = AdamState()
    state = initial_state(config)
    best_params = params
    logger.info(
        "Training %s on %d examples (%d val), %d classes, freeze_backbone=%s, augment=%s",
        model.name, len(x_train), len(data.x_val), num_classes, config.freeze_backbone, config.augment_mode.value,
    )

    for epoch in range(1, config.max_epochs + 1):
        lr = state.lr
        order = make_rng(config.seed, epoch).permutation(len(x_train))
        loss_sum = 0.0
        correct = 0
        for batch_index, start in enumerate(range(0, len(order), config.batch_size)):
            idx = order[start : start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            if config.augment_mode is AugmentMode.ONLINE:
                xb, yb = augment_arrays(
                    xb, yb, augment_config, config.seed,
                    mode=AugmentMode.ONLINE, epoch=epoch, indices=source_index[idx], workers=config.workers,
                )
            loss, grads, probs = network.loss_and_grads(xb, one_hot(yb, num_classes), params)
            if not np.isfinite(loss):
                raise NumericalError(epoch, batch_index)
            if not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise NumericalError(epoch, batch_index, "non-finite gradient")
            params, adam = adam_step(params, grads, adam, lr)
            loss_sum += loss * len(idx)
            correct += int(np.count_nonzero(np.argmax(probs, axis=-1) == yb))

        train_loss = loss_sum / len(order)
        train_acc = correct / len(order)
        val_loss, val_acc, _ = evaluate(network, params, data.x_val, data.y_val, config.batch_size)
        if not np.isfinite(val_loss):
            raise NumericalError(epoch, -1, "non-finite validation loss")

        state = plateau_update(state, val_loss, config)
        state = record_epoch(state, EpochRecord(epoch, lr, train_loss, train_acc, val_loss, val_acc))
        state = checkpoint_if_best(state, params, config.checkpoint_path, model)
        if state.improved:
            best_params = params
        if config.history_path is not None:
            write_history_table(state.history, config.history_path)
        logger.info(
            "Epoch %d/%d - lr %.3g - loss %.4f - acc %.4f - val_loss %.4f - val_acc %.4f",
            epoch, config.max_epochs, lr, train_loss, train_acc, val_loss, val_acc,
        )
        if early_stop_check(state, config.early_stop_patience):
            logger.info("Early stopping at epoch %d (best epoch %d)", epoch, state.best_epoch)
            break

    if config.checkpoint_path is not None and state.checkpoint_epoch is not None:
        reloaded = load_weights(config.checkpoint_path, model)
        best_params = ParamStore(reloaded.tensors, params.frozen)
    return FitResult(best_params=best_params, state=state)
