"""Exception hierarchy shared by every package in the engine."""

from __future__ import annotations

from typing import Sequence


class BanknoteError(Exception):
    """Root of all errors raised deliberately by this codebase."""


class ShapeMismatchError(BanknoteError, ValueError):
    """Two tensors (or a tensor and a declaration) disagree on shape."""

    def __init__(self, what: str, expected: Sequence[int] | str, actual: Sequence[int] | str) -> None:
        self.expected = tuple(expected) if not isinstance(expected, str) else expected
        self.actual = tuple(actual) if not isinstance(actual, str) else actual
        super().__init__(f"{what}: expected {self.expected}, got {self.actual}")


class GeometryError(BanknoteError, ValueError):
    """Convolution/pool geometry cannot be applied to the given input size."""


class MissingForwardStateError(BanknoteError, RuntimeError):
    """backward() was called without a cached forward pass."""


class NegativeVarianceError(BanknoteError, ValueError):
    """Batchnorm received a running variance below zero."""
