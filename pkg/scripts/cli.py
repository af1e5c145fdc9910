"""Operator CLI: train, evaluate, predict, augment-preview, inspect-weights, make-synthetic, plot-history.

Usage:
    python -m scripts.cli make-synthetic --out data/shapes
    python -m scripts.cli train --data data/shapes --model mobilenet --scale tiny --checkpoint runs/shapes.bnkw
    python -m scripts.cli evaluate --data data/shapes --weights runs/shapes.bnkw
    python -m scripts.cli predict --weights runs/shapes.bnkw --image some.ppm --top-k 3

Exit codes: 0 success, 2 usage, 3 data, 4 weight file, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from augment import AugmentConfig, AugmentMode, augment_variant
from config.app_config import IMAGE_SIZE_OVERRIDE, LOG_FORMAT, LOG_LEVEL, OUTPUT_DIR, SPLIT_RATIOS, WORKERS
from dataio import (
    DatasetError,
    LoadScope,
    Split,
    WeightFormatError,
    decode_image,
    describe_weights,
    encode_image,
    export_manifest,
    load_datasets,
    load_image,
    load_weights,
    split_arrays,
    stratified_split,
    write_pattern_dataset,
)
from dataio.files import write_text_atomic
from dataio.synthetic import PATTERNS
from engine.errors import ShapeMismatchError
from eval import (
    EvalReport,
    ReportFormat,
    append_report,
    build_class_table,
    evaluate_predictions,
    render_report,
)
from training import NumericalError, TrainConfig, TrainingData, fit, plot_history, read_history_table
from zoo import PRESETS, ModelFamily, Network, build_model, init_params

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_WEIGHTS = 4
EXIT_NUMERICAL = 5


class CliConfig(BaseModel):
    """Validated, subcommand-independent view of the parsed flags."""

    command: str
    data_dirs: list[Path] = Field(default_factory=list)
    model_family: ModelFamily = ModelFamily.MOBILENET
    scale: str = "tiny"
    image_size: int | None = Field(None, ge=8)
    weights_in: Path | None = None
    weights_scope: LoadScope = LoadScope.ALL
    split_ratios: tuple[float, float, float] = SPLIT_RATIOS
    seed: int = Field(0, ge=0)
    report_path: Path | None = None
    top_k: int = Field(3, ge=1)
    train: TrainConfig = Field(default_factory=TrainConfig)

    @field_validator("scale")
    @classmethod
    def validate_scale(cls, v: str) -> str:
        if v not in PRESETS:
            raise ValueError(f"unknown scale {v!r}; choose from {sorted(PRESETS)}")
        return v

    @field_validator("split_ratios")
    @classmethod
    def validate_split(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(r < 0 for r in v) or abs(sum(v) - 1.0) > 1e-6:
            raise ValueError(f"split ratios must be non-negative and sum to 1, got {v}")
        return v

    @property
    def resolved_image_size(self) -> int:
        return self.image_size or IMAGE_SIZE_OVERRIDE or PRESETS[self.scale].image_size


# ---------------------------------------------------------------------------
# Run card: what is needed to rebuild a checkpoint's model
# ---------------------------------------------------------------------------

def run_card_path(weights: Path) -> Path:
    return weights.with_name(weights.name + ".json")


def write_run_card(weights: Path, cfg: CliConfig, class_names: list[str]) -> Path:
    card = {
        "model_family": cfg.model_family.value,
        "scale": cfg.scale,
        "image_size": cfg.resolved_image_size,
        "class_names": class_names,
        "dataset": _dataset_name(cfg.data_dirs),
    }
    return write_text_atomic(run_card_path(weights), json.dumps(card, indent=2) + "\n")


def read_run_card(weights: Path) -> dict:
    path = run_card_path(weights)
    if not path.is_file():
        raise FileNotFoundError(f"run card not found next to weights: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def _dataset_name(dirs: Sequence[Path]) -> str:
    return "+".join(Path(d).name for d in dirs)


def _model_label(family: str, scale: str) -> str:
    return f"{family}-{scale}"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _load_split_dataset(cfg: CliConfig, image_size: int):
    manifest, items = load_datasets(cfg.data_dirs, (image_size, image_size), cfg.train.workers)
    if manifest.num_classes < 2:
        raise DatasetError(f"need at least two classes, found {manifest.num_classes}: {manifest.class_names}")
    manifest = stratified_split(manifest, cfg.split_ratios, cfg.seed)
    return manifest, items


def cmd_train(cfg: CliConfig) -> int:
    size = cfg.resolved_image_size
    manifest, items = _load_split_dataset(cfg, size)
    model = build_model(cfg.model_family, cfg.scale, manifest.num_classes, size)
    params = init_params(model, cfg.seed)
    if cfg.weights_in is not None:
        params = load_weights(cfg.weights_in, model, cfg.weights_scope, base=params)
    logger.info("Model %s: %d parameters", model.name, model.parameter_count())

    checkpoint = cfg.train.checkpoint_path
    export_manifest(manifest, checkpoint.with_name(checkpoint.name + ".manifest.tsv"))
    result = fit(model, params, TrainingData.from_manifest(manifest, items), AugmentConfig(), cfg.train)
    write_run_card(checkpoint, cfg, manifest.class_names)

    x_test, y_test = split_arrays(manifest, items, Split.TEST)
    if len(x_test) == 0:
        logger.warning("Test split is empty; reporting on the validation split")
        x_test, y_test = split_arrays(manifest, items, Split.VAL)
    probs = Network(model).predict_proba(x_test, result.best_params, cfg.train.batch_size)
    report = evaluate_predictions(
        y_test, probs, manifest.class_names, _dataset_name(cfg.data_dirs), _model_label(cfg.model_family.value, cfg.scale)
    )
    _emit_report(report, cfg.report_path or checkpoint.with_name(checkpoint.name + ".report.json"))
    return EXIT_OK


def cmd_evaluate(cfg: CliConfig, split: Split) -> int:
    card = read_run_card(cfg.weights_in)
    cfg = cfg.model_copy(update={"model_family": ModelFamily(card["model_family"]), "scale": card["scale"]})
    manifest, items = _load_split_dataset(cfg, card["image_size"])
    if manifest.class_names != card["class_names"]:
        raise DatasetError(f"dataset classes {manifest.class_names} differ from the checkpoint's {card['class_names']}")
    model = build_model(card["model_family"], card["scale"], len(card["class_names"]), card["image_size"])
    params = load_weights(cfg.weights_in, model)
    x, y = split_arrays(manifest, items, split)
    if len(x) == 0:
        raise DatasetError(f"the {split.value} split is empty")
    probs = Network(model).predict_proba(x, params, cfg.train.batch_size)
    report = evaluate_predictions(
        y, probs, manifest.class_names, _dataset_name(cfg.data_dirs), _model_label(card["model_family"], card["scale"])
    )
    _emit_report(report, cfg.report_path)
    return EXIT_OK


def _emit_report(report: EvalReport, path: Path | None) -> None:
    print(render_report([report], ReportFormat.TEXT))
    print(build_class_table(report))
    if path is not None:
        write_text_atomic(path, render_report([report], ReportFormat.STRUCTURED))
        append_report(path.parent / "results.jsonl", report)
        logger.info("Structured report written to %s", path)


def cmd_predict(cfg: CliConfig, image: Path) -> int:
    card = read_run_card(cfg.weights_in)
    names = card["class_names"]
    model = build_model(card["model_family"], card["scale"], len(names), card["image_size"])
    params = load_weights(cfg.weights_in, model)
    pixels = load_image(image, (card["image_size"], card["image_size"]))
    probs = Network(model).predict_proba(pixels, params)
    order = sorted(range(len(names)), key=lambda k: (-float(probs[k]), k))
    for k in order[: cfg.top_k]:
        print(f"{names[k]}\t{float(probs[k]):.6f}")
    return EXIT_OK


def cmd_augment_preview(image: Path, out_dir: Path, count: int, seed: int, suffix: str) -> int:
    pixels = decode_image(image).astype(np.float32) / 255.0
    config = AugmentConfig()
    for i in range(count):
        variant = augment_variant(pixels, config, seed, 0, i)
        encode_image(variant, out_dir / f"{image.stem}_aug_{i:02d}{suffix}")
    print(f"Wrote {count} augmented variants to {out_dir}")
    return EXIT_OK


def cmd_inspect_weights(weights: Path) -> int:
    infos = describe_weights(weights)
    for info in infos:
        print(f"{info.name}\t{'x'.join(str(d) for d in info.shape) or 'scalar'}\t{info.count}")
    print(f"{len(infos)} tensors, {sum(i.count for i in infos)} values")
    return EXIT_OK


def cmd_make_synthetic(out: Path, kinds: list[str], per_class: int, size: int, seed: int) -> int:
    count = write_pattern_dataset(out, kinds, per_class, size, seed)
    print(f"Wrote {count} images in {len(kinds)} classes to {out}")
    return EXIT_OK


def cmd_plot_history(history: Path, out: Path) -> int:
    plot_history(read_history_table(history), out)
    print(f"Plot written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", nargs="+", required=True, type=Path, help="One or more class-per-directory roots")
    p.add_argument("--split-ratios", nargs=3, type=float, default=list(SPLIT_RATIOS), dest="split_ratios")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=WORKERS)
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--report", type=Path, default=None, help="Write the structured (JSON) report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnk", description="Lightweight CNN transfer-learning engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Train a backbone + classifier head on a dataset")
    _add_data_flags(p)
    p.add_argument("--model", choices=[f.value for f in ModelFamily], default=ModelFamily.MOBILENET.value)
    p.add_argument("--scale", choices=sorted(PRESETS), default="tiny")
    p.add_argument("--image-size", type=int, default=None, dest="image_size")
    p.add_argument("--weights-in", type=Path, default=None, dest="weights_in")
    p.add_argument("--weights-scope", choices=[s.value for s in LoadScope], default=LoadScope.ALL.value, dest="weights_scope")
    p.add_argument("--freeze-backbone", action="store_true", dest="freeze_backbone")
    p.add_argument("--checkpoint", type=Path, default=None, help="Best-model weights path (default under BNK_OUTPUT_DIR)")
    p.add_argument("--history", type=Path, default=None, help="History table path (default <checkpoint>.history.tsv)")
    p.add_argument("--learning-rate", type=float, default=None, dest="learning_rate")
    p.add_argument("--max-epochs", type=int, default=None, dest="max_epochs")
    p.add_argument("--plateau-patience", type=int, default=None, dest="plateau_patience")
    p.add_argument("--plateau-factor", type=float, default=None, dest="plateau_factor")
    p.add_argument("--min-lr", type=float, default=None, dest="min_lr")
    p.add_argument("--early-stop-patience", type=int, default=None, dest="early_stop_patience")
    p.add_argument("--min-delta", type=float, default=None, dest="min_delta")
    p.add_argument("--augment-mode", choices=[m.value for m in AugmentMode], default=None, dest="augment_mode")

    p = sub.add_parser("evaluate", help="Evaluate a checkpoint on one split of a dataset")
    _add_data_flags(p)
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--split", choices=[s.value for s in Split], default=Split.TEST.value)

    p = sub.add_parser("predict", help="Rank classes for a single image")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--top-k", type=int, default=3, dest="top_k")

    p = sub.add_parser("augment-preview", help="Write augmented variants of one image")
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True, dest="out_dir")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--suffix", default=".png", help="Output codec by suffix, e.g. .png or .ppm")

    p = sub.add_parser("inspect-weights", help="List the tensors of a weight file")
    p.add_argument("--weights", type=Path, required=True)

    p = sub.add_parser("make-synthetic", help="Write a geometric-pattern dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--kinds", nargs="+", choices=sorted(PATTERNS), default=["disc", "ring", "square"])
    p.add_argument("--per-class", type=int, default=90, dest="per_class")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("plot-history", help="Plot accuracy/loss curves from a history table")
    p.add_argument("--history", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


_TRAIN_FLAGS = (
    "learning_rate", "batch_size", "max_epochs", "plateau_patience", "plateau_factor",
    "min_lr", "early_stop_patience", "min_delta", "augment_mode",
)


def config_from_args(args: argparse.Namespace) -> CliConfig:
    """Fold parsed flags into a CliConfig; raises pydantic.ValidationError on bad values."""
    overrides = {name: getattr(args, name) for name in _TRAIN_FLAGS if getattr(args, name, None) is not None}
    overrides["seed"] = getattr(args, "seed", 0)
    overrides["workers"] = getattr(args, "workers", WORKERS)
    model = getattr(args, "model", ModelFamily.MOBILENET.value)
    scale = getattr(args, "scale", "tiny")
    if args.command == "train":
        checkpoint = args.checkpoint or Path(OUTPUT_DIR) / f"{model}-{scale}.bnkw"
        overrides["checkpoint_path"] = checkpoint
        overrides["history_path"] = args.history or checkpoint.with_name(checkpoint.name + ".history.tsv")
        overrides["freeze_backbone"] = args.freeze_backbone
    return CliConfig(
        command=args.command,
        data_dirs=getattr(args, "data", None) or [],
        model_family=model,
        scale=scale,
        image_size=getattr(args, "image_size", None),
        weights_in=getattr(args, "weights_in", None) or getattr(args, "weights", None),
        weights_scope=getattr(args, "weights_scope", LoadScope.ALL.value),
        split_ratios=tuple(getattr(args, "split_ratios", SPLIT_RATIOS)),
        seed=getattr(args, "seed", 0),
        report_path=getattr(args, "report", None),
        top_k=getattr(args, "top_k", 3),
        train=TrainConfig(**overrides),
    )


def _dispatch(args: argparse.Namespace, cfg: CliConfig) -> int:
    handlers: dict[str, Callable[[], int]] = {
        "train": lambda: cmd_train(cfg),
        "evaluate": lambda: cmd_evaluate(cfg, Split(args.split)),
        "predict": lambda: cmd_predict(cfg, args.image),
        "augment-preview": lambda: cmd_augment_preview(args.image, args.out_dir, args.count, args.seed, args.suffix),
        "inspect-weights": lambda: cmd_inspect_weights(args.weights),
        "make-synthetic": lambda: cmd_make_synthetic(args.out, args.kinds, args.per_class, args.size, args.seed),
        "plot-history": lambda: cmd_plot_history(args.history, args.out),
    }
    return handlers[args.command]()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
    try:
        cfg = config_from_args(args)
        if args.command == "augment-preview" and args.count < 1:
            raise ValueError(f"--count must be positive, got {args.count}")
        return _dispatch(args, cfg)
    except (DatasetError, ShapeMismatchError, WeightFormatError, FileNotFoundError, NumericalError) as exc:
        return _fail(exc)
    except (ValidationError, ValueError) as exc:
        logger.error("Invalid arguments: %s", exc)
        return EXIT_USAGE


def _fail(exc: Exception) -> int:
    if isinstance(exc, DatasetError):
        logger.error("Data error: %s", exc)
        return EXIT_DATA
    if isinstance(exc, ShapeMismatchError):
        logger.error("Model and data disagree: %s", exc)
        return EXIT_DATA
    if isinstance(exc, (WeightFormatError, FileNotFoundError)):
        logger.error("Weight file error: %s", exc)
        return EXIT_WEIGHTS
    logger.error("Numerical failure: %s", exc)
    return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
