"""Image decode/encode through Pillow and bilinear resizing to the network input."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DatasetError
from .files import atomic_writer


class UndecodableImageError(DatasetError):
    pass


def decode_image(path: str | Path) -> np.ndarray:
    """Decode any Pillow-readable file (binary PPM included) to uint8 H×W×3 RGB."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UndecodableImageError(f"cannot decode {path}: {exc}") from exc


def resize_bilinear(image: np.ndarray, size: Sequence[int]) -> np.ndarray:
    """Half-pixel-centre bilinear resize of H×W×C with edge clamping, in float64."""
    image = np.asarray(image, dtype=np.float64)
    out_h, out_w = int(size[0]), int(size[1])
    in_h, in_w = image.shape[:2]
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be positive, got {tuple(size)}")
    if (in_h, in_w) == (out_h, out_w):
        return image.copy()

    def axis(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        src = np.clip((np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5, 0.0, n_in - 1)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, wy = axis(out_h, in_h)
    x0, x1, wx = axis(out_w, in_w)
    wy = wy[:, None, None]
    wx = wx[None, :, None]
    top = image[y0][:, x0] * (1 - wx) + image[y0][:, x1] * wx
    bottom = image[y1][:, x0] * (1 - wx) + image[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def load_image(path: str | Path, target_size: Sequence[int]) -> np.ndarray:
    """Decoded, resized and scaled into [0, 1] as float32 H×W×3."""
    pixels = resize_bilinear(decode_image(path), target_size) / 255.0
    return np.clip(pixels, 0.0, 1.0).astype(np.float32)


def to_uint8(tensor: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(np.asarray(tensor, dtype=np.float64), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def encode_image(tensor: np.ndarray, path: str | Path) -> Path:
    """Quantise a [0, 1] H×W×3 tensor to 8 bits and save it; the format follows the suffix."""
    path = Path(path)
    fmt = Image.registered_extensions().get(path.suffix.lower())
    if fmt is None:
        raise ValueError(f"no image codec for suffix {path.suffix!r}")
    data = to_uint8(tensor)
    if data.ndim != 3 or data.shape[-1] != 3:
        raise ValueError(f"expected H×W×3 pixels, got {data.shape}")
    with atomic_writer(path) as fh:
        Image.fromarray(data).save(fh, format=fmt)
    return path
