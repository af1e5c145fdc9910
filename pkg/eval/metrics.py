"""Confusion matrix and the metrics derived from it."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .eval_types import ConfusionMatrix, EvalReport


def predictions_from_probs(probs: np.ndarray) -> np.ndarray:
    """Argmax per row; ties go to the lowest class index."""
    return np.argmax(np.asarray(probs), axis=-1)


def confusion(
    true_labels: Sequence[int] | np.ndarray,
    predicted_labels: Sequence[int] | np.ndarray,
    num_classes: int,
    class_names: Sequence[str] | None = None,
) -> ConfusionMatrix:
    true = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != pred.shape or true.ndim != 1:
        raise ValueError(f"label vectors must be 1-D and equal length, got {true.shape} and {pred.shape}")
    if num_classes < 1:
        raise ValueError(f"num_classes must be positive, got {num_classes}")
    for name, labels in (("true", true), ("predicted", pred)):
        if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
            raise ValueError(f"{name} labels outside [0, {num_classes})")
    names = list(class_names) if class_names is not None else [str(k) for k in range(num_classes)]
    if len(names) != num_classes:
        raise ValueError(f"{len(names)} class names for {num_classes} classes")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return ConfusionMatrix(counts, names)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def derive_metrics(cm: ConfusionMatrix, dataset: str = "", model: str = "") -> EvalReport:
    """Per-class and macro precision/recall/F1 plus accuracy.

    Every ratio is a single division of integer counts. A zero denominator
    yields 0 and lists the class under `zero_division`.
    """
    counts = cm.counts.astype(np.int64)
    tp = [int(counts[k, k]) for k in range(cm.num_classes)]
    col = [int(c) for c in counts.sum(axis=0)]
    row = [int(r) for r in counts.sum(axis=1)]
    precision, recall, f1 = [], [], []
    flags: dict[str, list[str]] = {}
    for k, name in enumerate(cm.class_names):
        fp, fn = col[k] - tp[k], row[k] - tp[k]
        for metric, den in (("precision", tp[k] + fp), ("recall", tp[k] + fn), ("f1", 2 * tp[k] + fp + fn)):
            if den == 0:
                flags.setdefault(metric, []).append(name)
        precision.append(_ratio(tp[k], tp[k] + fp))
        recall.append(_ratio(tp[k], tp[k] + fn))
        f1.append(_ratio(2 * tp[k], 2 * tp[k] + fp + fn))
    k = cm.num_classes
    return EvalReport(
        dataset=dataset,
        model=model,
        class_names=list(cm.class_names),
        precision=precision,
        recall=recall,
        f1=f1,
        support=row,
        macro_precision=math.fsum(precision) / k,
        macro_recall=math.fsum(recall) / k,
        macro_f1=math.fsum(f1) / k,
        accuracy=_ratio(cm.correct, cm.total),
        correct=cm.correct,
        total=cm.total,
        zero_division=flags,
    )


def evaluate_predictions(
    true_labels: Sequence[int] | np.ndarray,
    probs: np.ndarray,
    class_names: Sequence[str],
    dataset: str = "",
    model: str = "",
) -> EvalReport:
    preds = predictions_from_probs(probs)
    return derive_metrics(confusion(true_labels, preds, len(class_names), class_names), dataset, model)
