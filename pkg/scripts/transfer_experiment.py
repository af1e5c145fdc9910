"""
Transfer-learning experiment on synthetic pattern tasks.

Pretrains a backbone on task A, then, for each seed pair, trains on the
disjoint task B (a) the pretrained backbone frozen under a fresh head and
(b) a randomly initialised model. Reports epochs to reach the validation
accuracy threshold for each pair and how often (a) got there first.

Usage:
    python -m scripts.transfer_experiment
    python -m scripts.transfer_experiment --pairs 10 --scale tiny --threshold 0.9 --out runs/transfer
"""

from __future__ import annotations

import argparse
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from augment import AugmentConfig, AugmentMode
from config.app_config import LOG_FORMAT, LOG_LEVEL, OUTPUT_DIR
from dataio import LoadScope, load_weights, pattern_arrays, save_weights
from eval.logger import append_record
from training import EpochRecord, TrainConfig, TrainingData, fit
from zoo import ModelFamily, ModelSpec, ParamStore, build_model, init_params

logger = logging.getLogger(__name__)

TASK_A = ("disc", "ring", "square", "cross")
TASK_B = ("checker", "triangle", "stripes", "diamond")


@dataclass
class PairResult:
    seed: int
    transfer_epochs: float            # inf when the threshold was never reached
    scratch_epochs: float

    @property
    def transfer_won(self) -> bool:
        return self.transfer_epochs < self.scratch_epochs


def epochs_to_threshold(history: Sequence[EpochRecord], threshold: float) -> float:
    for record in history:
        if record.val_acc >= threshold:
            return float(record.epoch)
    return math.inf


def task_data(kinds: Sequence[str], per_class: int, size: int, seed: int) -> TrainingData:
    """Two independently drawn sets of the same classes: train and validation."""
    x_train, y_train = pattern_arrays(kinds, per_class, size, seed)
    x_val, y_val = pattern_arrays(kinds, max(1, per_class // 4), size, seed + 10_000)
    return TrainingData(x_train, y_train, x_val, y_val, list(kinds))


def pretrain(
    family: ModelFamily,
    scale: str,
    data: TrainingData,
    size: int,
    epochs: int,
    checkpoint: Path,
    learning_rate: float,
) -> tuple[ModelSpec, ParamStore]:
    model = build_model(family, scale, data.num_classes, size)
    config = TrainConfig(max_epochs=epochs, learning_rate=learning_rate, seed=0, checkpoint_path=checkpoint, augment_mode=AugmentMode.NONE)
    result = fit(model, init_params(model, seed=0), data, AugmentConfig(), config)
    logger.info("Pretraining done: best val loss %.4f at epoch %d", result.state.best_val_loss, result.state.best_epoch)
    return model, result.best_params


def run_transfer_experiment(
    family: ModelFamily | str = ModelFamily.MOBILENET,
    scale: str = "tiny",
    pairs: int = 10,
    per_class: int = 40,
    size: int = 32,
    threshold: float = 0.9,
    pretrain_epochs: int = 15,
    max_epochs: int = 30,
    learning_rate: float = 1e-3,
    out_dir: Path = Path(OUTPUT_DIR) / "transfer",
) -> list[PairResult]:
    family = ModelFamily(family)
    out_dir.mkdir(parents=True, exist_ok=True)
    source_ckpt = out_dir / "task_a.bnkw"
    pretrain(family, scale, task_data(TASK_A, per_class, size, seed=1), size, pretrain_epochs, source_ckpt, learning_rate)

    target = task_data(TASK_B, per_class, size, seed=2)
    model = build_model(family, scale, target.num_classes, size)
    results: list[PairResult] = []
    for seed in range(pairs):
        fresh = init_params(model, seed=100 + seed)
        transferred = load_weights(source_ckpt, model, LoadScope.BACKBONE, base=fresh)
        common = dict(max_epochs=max_epochs, learning_rate=learning_rate, seed=seed, augment_mode=AugmentMode.NONE)
        frozen_run = fit(model, transferred, target, AugmentConfig(), TrainConfig(freeze_backbone=True, **common))
        scratch_run = fit(model, fresh, target, AugmentConfig(), TrainConfig(**common))
        pair = PairResult(
            seed=seed,
            transfer_epochs=epochs_to_threshold(frozen_run.history, threshold),
            scratch_epochs=epochs_to_threshold(scratch_run.history, threshold),
        )
        results.append(pair)
        append_record(out_dir / "pairs.jsonl", {**asdict(pair), "family": family.value, "scale": scale, "threshold": threshold})
        save_weights(frozen_run.best_params, out_dir / f"task_b_transfer_seed{seed}.bnkw", model)
    return results


def print_pairs(results: Sequence[PairResult], threshold: float) -> None:
    print(f"Epochs to {threshold:.0%} validation accuracy")
    print(f"{'seed':<6}{'transfer':>10}{'scratch':>10}  winner")
    for r in results:
        print(f"{r.seed:<6}{r.transfer_epochs:>10g}{r.scratch_epochs:>10g}  {'transfer' if r.transfer_won else 'scratch'}")
    wins = sum(r.transfer_won for r in results)
    print(f"\nTransfer reached the threshold first in {wins} of {len(results)} pairs")


def main() -> None:
    parser = argparse.ArgumentParser(description="Frozen pretrained backbone vs random init on a disjoint synthetic task")
    parser.add_argument("--model", choices=[f.value for f in ModelFamily], default=ModelFamily.MOBILENET.value)
    parser.add_argument("--scale", default="tiny")
    parser.add_argument("--pairs", type=int, default=10)
    parser.add_argument("--per-class", type=int, default=40, dest="per_class")
    parser.add_argument("--size", type=int, default=32)
    parser.add_argument("--threshold", type=float, default=0.9)
    parser.add_argument("--pretrain-epochs", type=int, default=15, dest="pretrain_epochs")
    parser.add_argument("--max-epochs", type=int, default=30, dest="max_epochs")
    parser.add_argument("--learning-rate", type=float, default=1e-3, dest="learning_rate")
    parser.add_argument("--out", type=Path, default=Path(OUTPUT_DIR) / "transfer")
    args = parser.parse_args()

    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
    results = run_transfer_experiment(
        args.model, args.scale, args.pairs, args.per_class, args.size,
        args.threshold, args.pretrain_epochs, args.max_epochs, args.learning_rate, args.out,
    )
    print_pairs(results, args.threshold)


if __name__ == "__main__":
    main()
