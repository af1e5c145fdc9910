"""Procedural geometric-pattern datasets for desk-scale runs."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from augment.rng import make_rng

from .images import encode_image

logger = logging.getLogger(__name__)

Mask = Callable[[np.ndarray, np.ndarray, float, np.random.Generator], np.ndarray]


def _disc(dx, dy, r, rng):
    return dx**2 + dy**2 < r**2


def _ring(dx, dy, r, rng):
    d2 = dx**2 + dy**2
    return (d2 < r**2) & (d2 > (0.55 * r) ** 2)


def _square(dx, dy, r, rng):
    return np.maximum(np.abs(dx), np.abs(dy)) < 0.8 * r


def _cross(dx, dy, r, rng):
    arm = 0.3 * r
    return ((np.abs(dx) < arm) & (np.abs(dy) < r)) | ((np.abs(dy) < arm) & (np.abs(dx) < r))


def _checker(dx, dy, r, rng):
    cell = max(2.0, 0.5 * r)
    return ((np.floor(dx / cell) + np.floor(dy / cell)) % 2) == 0


def _triangle(dx, dy, r, rng):
    return (dy < 0.8 * r) & (dy > -r) & (np.abs(dx) < (dy + r) / 2.0)


def _stripes(dx, dy, r, rng):
    angle = rng.uniform(-0.3, 0.3)
    period = max(2.0, 0.4 * r)
    return (np.floor((dx * np.cos(angle) + dy * np.sin(angle)) / period) % 2) == 0


def _diamond(dx, dy, r, rng):
    return np.abs(dx) + np.abs(dy) < r


PATTERNS: dict[str, Mask] = {
    "disc": _disc,
    "ring": _ring,
    "square": _square,
    "cross": _cross,
    "checker": _checker,
    "triangle": _triangle,
    "stripes": _stripes,
    "diamond": _diamond,
}


def draw_pattern(kind: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """One size×size×3 image in [0, 1]: a jittered shape over a contrasting background, plus noise."""
    if kind not in PATTERNS:
        raise ValueError(f"unknown pattern {kind!r}; choose from {sorted(PATTERNS)}")
    coords = np.arange(size, dtype=np.float64)
    ys, xs = np.meshgrid(coords, coords, indexing="ij")
    centre = (size - 1) / 2.0 + rng.uniform(-0.1, 0.1, size=2) * size
    radius = size * rng.uniform(0.25, 0.38)
    mask = PATTERNS[kind](xs - centre[1], ys - centre[0], radius, rng)
    background = rng.uniform(0.0, 0.35, size=3)
    foreground = rng.uniform(0.65, 1.0, size=3)
    image = np.where(mask[..., None], foreground, background)
    image += rng.normal(0.0, 0.03, size=image.shape)
    return np.clip(image, 0.0, 1.0).astype(np.float32)


def pattern_arrays(
    kinds: Sequence[str],
    per_class: int,
    size: int = 64,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """(images N×size×size×3 float32, labels int64); label i is kinds[i]."""
    images, labels = [], []
    for label, kind in enumerate(kinds):
        for i in range(per_class):
            images.append(draw_pattern(kind, size, make_rng(seed, label, i)))
            labels.append(label)
    return np.stack(images), np.asarray(labels, dtype=np.int64)


def write_pattern_dataset(
    root: str | Path,
    kinds: Sequence[str],
    per_class: int,
    size: int = 64,
    seed: int = 0,
    suffix: str = ".ppm",
) -> int:
    """Write root/<kind>/<kind>_NNNN<suffix> for every kind; returns the file count."""
    root = Path(root)
    written = 0
    for label, kind in enumerate(kinds):
        for i in range(per_class):
            image = draw_pattern(kind, size, make_rng(seed, label, i))
            encode_image(image, root / kind / f"{kind}_{i:04d}{suffix}")
            written += 1
    logger.info("Wrote %d synthetic images (%d classes) under %s", written, len(kinds), root)
    return written
