"""Single source of truth for all tuneable engine settings.

Operational knobs are read from environment variables with safe defaults.
Training-recipe constants are plain values so the recipe defaults never
drift with the environment. Import from here rather than re-defining in
individual modules.
"""

from __future__ import annotations

import os

from dotenv import load_dotenv

load_dotenv()

# --- Runtime / operational ---
LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
WORKERS: int = int(os.getenv("BNK_WORKERS", "1"))
OUTPUT_DIR: str = os.getenv("BNK_OUTPUT_DIR", "runs")
IMAGE_SIZE_OVERRIDE: int | None = int(os.getenv("BNK_IMAGE_SIZE")) if os.getenv("BNK_IMAGE_SIZE") else None

# --- Network input ---
INPUT_SIZE: tuple[int, int] = (224, 224)
INPUT_CHANNELS: int = 3

# --- Numerics ---
BATCHNORM_EPS: float = 1e-3
LOG_CLIP_EPS: float = 1e-12

# --- Classifier head ---
HEAD_WIDTHS: tuple[int, ...] = (1024, 512, 512, 256, 128)

# --- Training recipe ---
LEARNING_RATE: float = 1e-4
BATCH_SIZE: int = 32
MAX_EPOCHS: int = 50
PLATEAU_PATIENCE: int = 2
PLATEAU_FACTOR: float = 0.8
MIN_LR: float = 1e-7
EARLY_STOP_PATIENCE: int = 10
ADAM_BETA1: float = 0.9
ADAM_BETA2: float = 0.999
ADAM_EPS: float = 1e-7

# --- Augmentation ---
ROTATION_RANGE_DEG: float = 180.0
WIDTH_SHIFT_FRAC: float = 0.1
HEIGHT_SHIFT_FRAC: float = 0.1
SHEAR_RANGE: float = 0.1
ZOOM_RANGE: tuple[float, float] = (0.8, 1.5)
OVERSAMPLE_FACTOR: int = 10

# --- Dataset split ---
SPLIT_RATIOS: tuple[float, float, float] = (0.8, 0.1, 0.1)

# --- Weight file ---
WEIGHT_MAGIC: bytes = b"BNKW"
WEIGHT_VERSION: int = 1
