"""Per-epoch history records, the tab-separated history table and its plot."""

from __future__ import annotations

import logging
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Sequence

from dataio.files import write_text_atomic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


COLUMNS = tuple(f.name for f in fields(EpochRecord))


def format_history_table(history: Sequence[EpochRecord]) -> str:
    """Header plus one row per epoch; floats use repr so the table reads back exactly."""
    rows = ["\t".join(COLUMNS)]
    for record in history:
        rows.append("\t".join(str(v) if isinstance(v, int) else repr(float(v)) for v in astuple(record)))
    return "\n".join(rows) + "\n"


def write_history_table(history: Sequence[EpochRecord], path: str | Path) -> Path:
    return write_text_atomic(path, format_history_table(history))


def read_history_table(path: str | Path) -> list[EpochRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split("\t")) != COLUMNS:
        raise ValueError(f"{path} is not a history table (expected header {COLUMNS})")
    records = []
    for line in lines[1:]:
        if not line.strip():
            continue
        epoch, *values = line.split("\t")
        records.append(EpochRecord(int(epoch), *(float(v) for v in values)))
    return records


def plot_history(history: Sequence[EpochRecord], path: str | Path) -> Path:
    """Accuracy and loss curves (training vs validation) side by side, saved as PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    epochs = [r.epoch for r in history]
    fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(10, 4))
    ax_acc.plot(epochs, [r.train_acc for r in history], label="training")
    ax_acc.plot(epochs, [r.val_acc for r in history], label="validation")
    ax_acc.set_title("Accuracy")
    ax_acc.set_xlabel("epoch")
    ax_acc.legend()
    ax_loss.plot(epochs, [r.train_loss for r in history], label="training")
    ax_loss.plot(epochs, [r.val_loss for r in history], label="validation")
    ax_loss.set_title("Loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="png")
    plt.close(fig)
    logger.info("Wrote history plot to %s", path)
    return path
