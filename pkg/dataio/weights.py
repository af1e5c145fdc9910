"""Binary weight file: save, load, inspect.

Layout (all integers little-endian):

    magic      4 bytes  b"BNKW"
    version    u32
    count      u32
    count × {
        name_len u16, name (UTF-8)
        rank     u8,  dims rank × u32
        values   prod(dims) × f32
    }
    checksum   u32      CRC-32 of every preceding byte
"""

from __future__ import annotations

import logging
import math
import struct
import zlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from config.app_config import WEIGHT_MAGIC, WEIGHT_VERSION
from zoo.graph import ModelSpec
from zoo.params import PARAM_DTYPE, ParamStore, init_params, layer_of

from .errors import (
    BadMagicError,
    ChecksumError,
    ShapeAgreementError,
    UnsupportedVersionError,
    WeightFormatError,
)
from .files import atomic_writer

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<4sII")
_CRC = struct.Struct("<I")
_WIRE_DTYPE = np.dtype("<f4")


class LoadScope(str, Enum):
    ALL = "all"
    BACKBONE = "backbone"


@dataclass(frozen=True)
class TensorInfo:
    name: str
    shape: tuple[int, ...]

    @property
    def count(self) -> int:
        return math.prod(self.shape)


def encode_weights(tensors: dict[str, np.ndarray]) -> bytes:
    buf = bytearray(_HEADER.pack(WEIGHT_MAGIC, WEIGHT_VERSION, len(tensors)))
    for name, value in tensors.items():
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise WeightFormatError(f"tensor name too long: {name[:40]}...")
        arr = np.asarray(value)
        if arr.ndim > 0xFF:
            raise WeightFormatError(f"tensor {name} has rank {arr.ndim}")
        buf += struct.pack("<H", len(raw)) + raw
        buf += struct.pack(f"<B{arr.ndim}I", arr.ndim, *arr.shape)
        buf += arr.astype(_WIRE_DTYPE).tobytes(order="C")
    buf += _CRC.pack(zlib.crc32(buf))
    return bytes(buf)


def decode_weights(data: bytes) -> dict[str, np.ndarray]:
    """Parse a weight file image; checks size, magic, checksum and version in that order."""
    if len(data) < _HEADER.size + _CRC.size:
        raise ChecksumError(f"weight file truncated to {len(data)} bytes")
    magic, version, count = _HEADER.unpack_from(data, 0)
    if magic != WEIGHT_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {WEIGHT_MAGIC!r}")
    body, (stored,) = data[: -_CRC.size], _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(body) != stored:
        raise ChecksumError(f"checksum mismatch: stored {stored:#010x}, computed {zlib.crc32(body):#010x}")
    if version != WEIGHT_VERSION:
        raise UnsupportedVersionError(f"weight format version {version} (supported: {WEIGHT_VERSION})")

    tensors: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", body, offset)
            offset += 1
            shape = struct.unpack_from(f"<{rank}I", body, offset)
            offset += 4 * rank
            nbytes = math.prod(shape) * _WIRE_DTYPE.itemsize
            if offset + nbytes > len(body):
                raise WeightFormatError(f"tensor {name} runs past the end of the file")
            values = np.frombuffer(body, dtype=_WIRE_DTYPE, count=math.prod(shape), offset=offset)
            offset += nbytes
            if name in tensors:
                raise WeightFormatError(f"duplicate tensor name {name}")
            tensors[name] = values.reshape(shape).astype(PARAM_DTYPE)
    except (struct.error, UnicodeDecodeError) as exc:
        raise WeightFormatError(f"malformed tensor record: {exc}") from exc
    if offset != len(body):
        raise WeightFormatError(f"{len(body) - offset} trailing bytes after {count} tensors")
    return tensors


def save_weights(params: ParamStore, path: str | Path, model: ModelSpec | None = None) -> Path:
    """Write every tensor of `params`; declaration order when a model is given."""
    keys = list(model.param_shapes) if model is not None else list(params)
    if model is not None:
        params.check_against(model)
    path = Path(path)
    with atomic_writer(path) as fh:
        fh.write(encode_weights({key: params[key] for key in keys}))
    logger.debug("Wrote %d tensors to %s", len(keys), path)
    return path


def read_weight_file(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"weight file not found: {path}")
    return decode_weights(path.read_bytes())


def _agree(tensors: dict[str, np.ndarray], model: ModelSpec, keys: list[str]) -> None:
    declared = model.param_shapes
    missing = [k for k in keys if k not in tensors]
    if missing:
        raise ShapeAgreementError(f"weight file lacks {len(missing)} tensors of {model.name}, e.g. {missing[:3]}")
    for key in keys:
        if tensors[key].shape != declared[key]:
            raise ShapeAgreementError(f"{key}: file has {tensors[key].shape}, model declares {declared[key]}")


def load_weights(
    path: str | Path,
    model: ModelSpec | None = None,
    scope: LoadScope | str = LoadScope.ALL,
    base: ParamStore | None = None,
) -> ParamStore:
    """Load a weight file, optionally validated against a model.

    scope=all: the file must hold exactly the model's parameters.
    scope=backbone: only the backbone tensors are taken (all must be present);
    every other parameter comes from `base` (default: fresh init_params).
    """
    tensors = read_weight_file(path)
    if model is None:
        return ParamStore(tensors)
    scope = LoadScope(scope)
    if scope is LoadScope.ALL:
        extra = sorted(set(tensors) - set(model.param_shapes))
        if extra:
            raise ShapeAgreementError(f"weight file has tensors unknown to {model.name}: {extra[:3]}")
        _agree(tensors, model, list(model.param_shapes))
        return ParamStore({key: tensors[key] for key in model.param_shapes})
    backbone = set(model.backbone_layers)
    keys = [key for key in model.param_shapes if layer_of(key) in backbone]
    _agree(tensors, model, keys)
    start = base if base is not None else init_params(model)
    logger.info("Loaded %d backbone tensors from %s", len(keys), path)
    return start.with_tensors({key: tensors[key] for key in keys})


def describe_weights(path: str | Path) -> list[TensorInfo]:
    return [TensorInfo(name, tuple(value.shape)) for name, value in read_weight_file(path).items()]
