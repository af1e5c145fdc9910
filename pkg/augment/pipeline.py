"""Online and offline augmentation over labelled image arrays."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Sequence

import numpy as np

from .affine import apply_affine, sample_params
from .config import AugmentConfig, AugmentMode
from .rng import make_rng

logger = logging.getLogger(__name__)


def augment_variant(image: np.ndarray, config: AugmentConfig, seed: int, index: int, epoch: int = 0) -> np.ndarray:
    """The variant of `image` keyed by (seed, index, epoch); identical wherever it is computed."""
    params = sample_params(config, make_rng(seed, index, epoch))
    return apply_affine(image, params)


def _jobs(count: int, mode: AugmentMode, factor: int, epoch: int) -> list[tuple[int, int | None]]:
    """(position in the input, variant key or None for the original), in emission order."""
    if mode is AugmentMode.NONE:
        return [(i, None) for i in range(count)]
    if mode is AugmentMode.ONLINE:
        return [(i, epoch) for i in range(count)]
    jobs: list[tuple[int, int | None]] = []
    for i in range(count):
        jobs.append((i, None))
        jobs.extend((i, k) for k in range(1, factor))
    return jobs


def augment_batch(
    images: np.ndarray | Sequence[np.ndarray],
    labels: Sequence[int] | np.ndarray,
    config: AugmentConfig,
    seed: int,
    *,
    mode: AugmentMode | str = AugmentMode.OFFLINE,
    epoch: int = 0,
    indices: Sequence[int] | None = None,
    workers: int = 1,
) -> Iterator[tuple[np.ndarray, int]]:
    """Yield (image, label) pairs.

    offline: each source image followed by oversample_factor - 1 variants.
    online: one fresh variant per image for this epoch.
    none: the originals.

    `indices` are the stable dataset indices of the images (default 0..n-1);
    they, not the position in this call, key the random draws, so results do
    not depend on shuffling, batching or worker count.
    """
    mode = AugmentMode(mode)
    if len(images) != len(labels):
        raise ValueError(f"{len(images)} images but {len(labels)} labels")
    keys = list(range(len(images))) if indices is None else [int(i) for i in indices]
    jobs = _jobs(len(images), mode, config.oversample_factor, epoch)

    def run(job: tuple[int, int | None]) -> tuple[np.ndarray, int]:
        pos, variant = job
        label = int(labels[pos])
        if variant is None:
            return np.asarray(images[pos]), label
        return augment_variant(images[pos], config, seed, keys[pos], variant), label

    if workers <= 1:
        yield from map(run, jobs)
        return
    with ThreadPoolExecutor(max_workers=workers) as executor:
        yield from executor.map(run, jobs)


def augment_arrays(
    images: np.ndarray,
    labels: np.ndarray,
    config: AugmentConfig,
    seed: int,
    **kwargs,
) -> tuple[np.ndarray, np.ndarray]:
    """augment_batch collected into stacked (images, labels) arrays."""
    pairs = list(augment_batch(images, labels, config, seed, **kwargs))
    if not pairs:
        return np.asarray(images)[:0], np.asarray(labels, dtype=np.int64)[:0]
    out_images = np.stack([img for img, _ in pairs])
    out_labels = np.asarray([label for _, label in pairs], dtype=np.int64)
    logger.debug("augmented %d source images into %d", len(images), len(pairs))
    return out_images, out_labels
