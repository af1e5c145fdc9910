"""Convolution and pooling geometry bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import GeometryError


class Padding(str, Enum):
    VALID = "valid"
    SAME = "same"


@dataclass(frozen=True)
class ConvGeometry:
    """Kernel size, stride and padding for a sliding-window op.

    `same` padding is symmetric zero padding; an odd total pad puts the extra
    pixel on the bottom/right.
    """

    kernel_h: int
    kernel_w: int
    stride: int = 1
    padding: Padding = Padding.VALID

    def __post_init__(self) -> None:
        if self.kernel_h < 1 or self.kernel_w < 1:
            raise GeometryError(f"kernel must be positive, got {self.kernel_h}x{self.kernel_w}")
        if self.stride < 1:
            raise GeometryError(f"stride must be positive, got {self.stride}")
        object.__setattr__(self, "padding", Padding(self.padding))

    def output_size(self, height: int, width: int) -> tuple[int, int]:
        if height < 1 or width < 1:
            raise GeometryError(f"input spatial dims must be positive, got {height}x{width}")
        if self.padding is Padding.SAME:
            return math.ceil(height / self.stride), math.ceil(width / self.stride)
        out_h = (height - self.kernel_h) // self.stride + 1
        out_w = (width - self.kernel_w) // self.stride + 1
        if height < self.kernel_h or width < self.kernel_w or out_h < 1 or out_w < 1:
            raise GeometryError(
                f"valid {self.kernel_h}x{self.kernel_w}/stride {self.stride} window does not fit "
                f"a {height}x{width} input"
            )
        return out_h, out_w

    def pads(self, height: int, width: int) -> tuple[int, int, int, int]:
        """Return (top, bottom, left, right) zero padding for this input size."""
        if self.padding is Padding.VALID:
            return 0, 0, 0, 0
        out_h, out_w = self.output_size(height, width)
        total_h = max((out_h - 1) * self.stride + self.kernel_h - height, 0)
        total_w = max((out_w - 1) * self.stride + self.kernel_w - width, 0)
        return total_h // 2, total_h - total_h // 2, total_w // 2, total_w - total_w // 2
