"""Validated training settings; defaults are the reference recipe."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationInfo, field_validator, model_validator

from augment.config import AugmentMode
from config.app_config import (
    BATCH_SIZE,
    EARLY_STOP_PATIENCE,
    LEARNING_RATE,
    MAX_EPOCHS,
    MIN_LR,
    PLATEAU_FACTOR,
    PLATEAU_PATIENCE,
    WORKERS,
)


class TrainConfig(BaseModel):
    learning_rate: float = Field(LEARNING_RATE, ge=0.0)
    batch_size: int = Field(BATCH_SIZE, ge=1)
    max_epochs: int = Field(MAX_EPOCHS, ge=1)
    plateau_patience: int = Field(PLATEAU_PATIENCE, ge=1)
    plateau_factor: float = Field(PLATEAU_FACTOR, gt=0.0, lt=1.0)
    min_lr: float = Field(MIN_LR, ge=0.0, description="Plateau floor; defaults to the smaller of MIN_LR and learning_rate.")
    early_stop_patience: int = Field(EARLY_STOP_PATIENCE, ge=1)
    min_delta: float = Field(0.0, ge=0.0, description="Required drop in val loss to count as improvement.")
    checkpoint_path: Path | None = None
    history_path: Path | None = None
    seed: int = Field(0, ge=0)
    freeze_backbone: bool = False
    monitor: Literal["val_loss"] = "val_loss"
    augment_mode: AugmentMode = AugmentMode.ONLINE
    workers: int = Field(WORKERS, ge=1)

    model_config = {"frozen": True}

    @model_validator(mode="before")
    @classmethod
    def default_min_lr_below_lr(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("min_lr") is None and isinstance(data.get("learning_rate"), (int, float)):
            data = {**data, "min_lr": min(MIN_LR, data["learning_rate"])}
        return data

    @field_validator("min_lr")
    @classmethod
    def validate_min_lr(cls, v: float, info: ValidationInfo) -> float:
        lr = info.data.get("learning_rate")
        if lr is not None and v > lr:
            raise ValueError(f"min_lr {v} exceeds learning_rate {lr}")
        return v
