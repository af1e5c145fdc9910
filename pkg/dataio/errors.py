"""Dataset and weight-file error categories."""

from __future__ import annotations

from engine.errors import BanknoteError


class DatasetError(BanknoteError, ValueError):
    """A dataset directory cannot be used (missing, no classes, an empty class)."""


class WeightFormatError(BanknoteError, ValueError):
    """A weight file is malformed or does not fit the model."""


class BadMagicError(WeightFormatError):
    pass


class UnsupportedVersionError(WeightFormatError):
    pass


class ChecksumError(WeightFormatError):
    """Checksum mismatch; also raised for truncated files."""


class ShapeAgreementError(WeightFormatError):
    """Stored tensor names or shapes disagree with the model declaration."""
