"""Class-per-directory dataset ingestion, stratified splitting and manifest export."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from augment.rng import make_rng
from config.app_config import INPUT_SIZE, SPLIT_RATIOS, WORKERS

from .errors import DatasetError
from .files import write_text_atomic
from .images import UndecodableImageError, load_image

logger = logging.getLogger(__name__)


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass
class LabeledImage:
    pixels: np.ndarray
    label_index: int
    source_path: str


@dataclass
class DatasetManifest:
    """Class names (sorted), one entry per decoded item, and each item's split.

    `paths`, `labels` and `splits` are parallel lists in ingest order: classes
    in sorted order, files sorted by name within a class.
    """

    class_names: list[str]
    paths: list[str]
    labels: list[int]
    splits: list[Split] = field(default_factory=list)
    skipped: int = 0

    def __post_init__(self) -> None:
        if not self.splits:
            self.splits = [Split.TRAIN] * len(self.paths)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def counts(self) -> dict[str, int]:
        totals = {name: 0 for name in self.class_names}
        for label in self.labels:
            totals[self.class_names[label]] += 1
        return totals

    def indices(self, split: Split | str) -> list[int]:
        split = Split(split)
        return [i for i, s in enumerate(self.splits) if s is split]

    def split_counts(self) -> dict[Split, dict[str, int]]:
        table = {s: {name: 0 for name in self.class_names} for s in Split}
        for label, s in zip(self.labels, self.splits):
            table[s][self.class_names[label]] += 1
        return table


def _class_dirs(root: Path) -> list[Path]:
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    dirs = sorted((p for p in root.iterdir() if p.is_dir() and not p.name.startswith(".")), key=lambda p: p.name)
    if not dirs:
        raise DatasetError(f"dataset root {root} has no class directories")
    return dirs


def _files(class_dir: Path) -> list[Path]:
    return sorted((p for p in class_dir.iterdir() if p.is_file() and not p.name.startswith(".")), key=lambda p: p.name)


def load_datasets(
    roots: Sequence[str | Path],
    target_size: Sequence[int] = INPUT_SIZE,
    workers: int = WORKERS,
) -> tuple[DatasetManifest, list[LabeledImage]]:
    """Load one or more class-per-directory roots as a single dataset.

    The class set is the sorted union of class directory names across roots;
    a class may draw files from several roots. Undecodable files are skipped
    with a warning and counted in `manifest.skipped`.
    """
    if not roots:
        raise DatasetError("no dataset roots given")
    per_class: dict[str, list[Path]] = {}
    for root in roots:
        for class_dir in _class_dirs(Path(root)):
            per_class.setdefault(class_dir.name, []).extend(_files(class_dir))
    class_names = sorted(per_class)
    jobs = [(path, label) for label, name in enumerate(class_names) for path in per_class[name]]

    def decode(job: tuple[Path, int]) -> LabeledImage | None:
        path, label = job
        try:
            return LabeledImage(load_image(path, target_size), label, str(path))
        except UndecodableImageError as exc:
            logger.warning("Skipping undecodable image: %s", exc)
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            decoded = list(executor.map(decode, jobs))
    else:
        decoded = [decode(job) for job in jobs]

    items = [item for item in decoded if item is not None]
    skipped = len(decoded) - len(items)
    present = {item.label_index for item in items}
    empty = [name for label, name in enumerate(class_names) if label not in present]
    if empty:
        raise DatasetError(f"class directories with no decodable images: {empty}")
    manifest = DatasetManifest(
        class_names=class_names,
        paths=[item.source_path for item in items],
        labels=[item.label_index for item in items],
        skipped=skipped,
    )
    logger.info(
        "Loaded %d images in %d classes from %s (%d skipped)",
        len(items), len(class_names), ", ".join(str(r) for r in roots), skipped,
    )
    return manifest, items


def load_dataset(
    root_dir: str | Path,
    target_size: Sequence[int] = INPUT_SIZE,
    workers: int = WORKERS,
) -> tuple[DatasetManifest, list[LabeledImage]]:
    return load_datasets([root_dir], target_size, workers)


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """(train, val, test) counts for one class: floor for val/test, remainder to train."""
    n_val = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    return n - n_val - n_test, n_val, n_test


def _check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-6:
        raise ValueError(f"split ratios must be three non-negative values summing to 1, got {tuple(ratios)}")
    return tuple(float(r) for r in ratios)  # type: ignore[return-value]


def stratified_split(manifest: DatasetManifest, ratios: Sequence[float] = SPLIT_RATIOS, seed: int = 0) -> DatasetManifest:
    """Per class: a seeded permutation, the first n_val to val, the next n_test to test, the rest to train."""
    ratios = _check_ratios(ratios)
    splits = [Split.TRAIN] * len(manifest.paths)
    for label in range(manifest.num_classes):
        members = [i for i, lab in enumerate(manifest.labels) if lab == label]
        _, n_val, n_test = split_sizes(len(members), ratios)
        order = make_rng(seed, label).permutation(len(members))
        for rank, pos in enumerate(order):
            if rank < n_val:
                splits[members[pos]] = Split.VAL
            elif rank < n_val + n_test:
                splits[members[pos]] = Split.TEST
    return replace(manifest, splits=splits)


def split_arrays(
    manifest: DatasetManifest,
    items: Sequence[LabeledImage],
    split: Split | str,
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked float32 pixels and int64 labels of one split, in manifest order."""
    idx = manifest.indices(split)
    if not idx:
        shape = items[0].pixels.shape if items else (0, 0, 3)
        return np.zeros((0, *shape), dtype=np.float32), np.zeros(0, dtype=np.int64)
    x = np.stack([items[i].pixels for i in idx]).astype(np.float32, copy=False)
    y = np.asarray([items[i].label_index for i in idx], dtype=np.int64)
    return x, y


def export_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    """Tab-separated audit table: path, class, split."""
    lines = ["path\tclass\tsplit"]
    for p, label, split in zip(manifest.paths, manifest.labels, manifest.splits):
        lines.append(f"{p}\t{manifest.class_names[label]}\t{split.value}")
    return write_text_atomic(path, "\n".join(lines) + "\n")
