"""Seeded random-affine augmentation."""

from .affine import AffineParams, apply_affine, sample_params, source_coordinates
from .config import AugmentConfig, AugmentMode, FillMode
from .pipeline import augment_arrays, augment_batch, augment_variant
from .rng import make_rng

__all__ = [
    "AffineParams",
    "apply_affine",
    "sample_params",
    "source_coordinates",
    "AugmentConfig",
    "AugmentMode",
    "FillMode",
    "augment_arrays",
    "augment_batch",
    "augment_variant",
    "make_rng",
]
