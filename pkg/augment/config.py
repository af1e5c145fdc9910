"""Validated augmentation settings."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field, field_validator

from config.app_config import (
    HEIGHT_SHIFT_FRAC,
    OVERSAMPLE_FACTOR,
    ROTATION_RANGE_DEG,
    SHEAR_RANGE,
    WIDTH_SHIFT_FRAC,
    ZOOM_RANGE,
)


class FillMode(str, Enum):
    NEAREST = "nearest"


class AugmentMode(str, Enum):
    ONLINE = "online"
    OFFLINE = "offline"
    NONE = "none"


class AugmentConfig(BaseModel):
    """Random affine ranges; the defaults are the reference training recipe."""

    rotation_range_deg: float = Field(ROTATION_RANGE_DEG, ge=0.0, le=180.0)
    width_shift_frac: float = Field(WIDTH_SHIFT_FRAC, ge=0.0, lt=1.0)
    height_shift_frac: float = Field(HEIGHT_SHIFT_FRAC, ge=0.0, lt=1.0)
    shear_range: float = Field(SHEAR_RANGE, ge=0.0, lt=1.5, description="Shear angle bound in radians.")
    zoom_range: tuple[float, float] = ZOOM_RANGE
    horizontal_flip: bool = True
    fill_mode: FillMode = FillMode.NEAREST
    oversample_factor: int = Field(OVERSAMPLE_FACTOR, ge=1)

    model_config = {"frozen": True}

    @field_validator("zoom_range")
    @classmethod
    def validate_zoom(cls, v: tuple[float, float]) -> tuple[float, float]:
        low, high = v
        if low <= 0 or high <= 0:
            raise ValueError(f"zoom bounds must be positive, got {v}")
        if low > high:
            raise ValueError(f"zoom lower bound exceeds upper bound: {v}")
        return v

    @classmethod
    def identity(cls) -> "AugmentConfig":
        """All ranges collapsed; every sampled transform is the identity."""
        return cls(
            rotation_range_deg=0.0,
            width_shift_frac=0.0,
            height_shift_frac=0.0,
            shear_range=0.0,
            zoom_range=(1.0, 1.0),
            horizontal_flip=False,
        )
