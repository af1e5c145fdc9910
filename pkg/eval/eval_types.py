"""Typed dataclasses for evaluation inputs and outputs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    counts: np.ndarray                # K×K int64; rows = true class, columns = predicted
    class_names: list[str]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))


@dataclass
class EvalReport:
    dataset: str
    model: str
    class_names: list[str]
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]                # true-class counts
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    correct: int
    total: int
    # metric name -> classes whose denominator was zero (value reported as 0)
    zero_division: dict[str, list[str]] = field(default_factory=dict)

    def row(self) -> dict[str, float | str]:
        """The summary fields shown in the comparison table."""
        return {
            "dataset": self.dataset,
            "model": self.model,
            "precision": self.macro_precision,
            "recall": self.macro_recall,
            "accuracy": self.accuracy,
            "f1": self.macro_f1,
        }
