"""Random affine transforms: sampling and nearest-neighbour warping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from engine.errors import ShapeMismatchError

from .config import AugmentConfig


@dataclass(frozen=True)
class AffineParams:
    """One sampled transform.

    Applied to the content in the order: rotate about the centre
    (counter-clockwise as displayed), shear along x, zoom (>1 enlarges),
    translate by a fraction of width/height, then mirror horizontally.
    """

    angle_deg: float = 0.0
    dx_frac: float = 0.0
    dy_frac: float = 0.0
    shear: float = 0.0
    zoom_x: float = 1.0
    zoom_y: float = 1.0
    flip: bool = False

    @property
    def is_identity(self) -> bool:
        return self == AffineParams()


def sample_params(config: AugmentConfig, rng: np.random.Generator) -> AffineParams:
    """Draw angle, dx, dy, shear, zoom, flip in that order.

    Every draw is always consumed, even for a collapsed range or with flipping
    disabled, so a stream position maps to the same field regardless of config.
    """
    angle = rng.uniform(0.0, config.rotation_range_deg)
    dx = rng.uniform(-config.width_shift_frac, config.width_shift_frac)
    dy = rng.uniform(-config.height_shift_frac, config.height_shift_frac)
    shear = rng.uniform(-config.shear_range, config.shear_range)
    zoom = rng.uniform(*config.zoom_range)
    flip = rng.random() < 0.5
    return AffineParams(
        angle_deg=float(angle),
        dx_frac=float(dx),
        dy_frac=float(dy),
        shear=float(shear),
        zoom_x=float(zoom),
        zoom_y=float(zoom),
        flip=bool(flip and config.horizontal_flip),
    )


def source_coordinates(height: int, width: int, params: AffineParams) -> tuple[np.ndarray, np.ndarray]:
    """Continuous source (row, col) for every output pixel, before rounding and clamping."""
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    rows, cols = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")
    u = cols - cx
    v = rows - cy
    if params.flip:
        u = -u
    u = u - params.dx_frac * width
    v = v - params.dy_frac * height
    u = u / params.zoom_x
    v = v / params.zoom_y
    u = u - math.tan(params.shear) * v
    theta = math.radians(params.angle_deg)
    cos, sin = math.cos(theta), math.sin(theta)
    src_u = cos * u - sin * v
    src_v = sin * u + cos * v
    return src_v + cy, src_u + cx


def apply_affine(image: np.ndarray, params: AffineParams) -> np.ndarray:
    """Warp by inverse mapping with nearest-neighbour sampling and edge-clamp fill."""
    image = np.asarray(image)
    if image.ndim != 3 or min(image.shape) < 1:
        raise ShapeMismatchError("augment image", "H×W×C with positive dims", image.shape)
    if params.is_identity:
        return image.copy()
    height, width = image.shape[:2]
    src_y, src_x = source_coordinates(height, width, params)
    iy = np.clip(np.floor(src_y + 0.5).astype(np.int64), 0, height - 1)
    ix = np.clip(np.floor(src_x + 0.5).astype(np.int64), 0, width - 1)
    return image[iy, ix]
