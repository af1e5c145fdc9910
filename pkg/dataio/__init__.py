"""Dataset ingestion, image codecs, synthetic fixtures and the weight file format."""

from .dataset import (
    DatasetManifest,
    LabeledImage,
    Split,
    export_manifest,
    load_dataset,
    load_datasets,
    split_arrays,
    split_sizes,
    stratified_split,
)
from .errors import (
    BadMagicError,
    ChecksumError,
    DatasetError,
    ShapeAgreementError,
    UnsupportedVersionError,
    WeightFormatError,
)
from .files import atomic_writer, write_text_atomic
from .images import UndecodableImageError, decode_image, encode_image, load_image, resize_bilinear
from .synthetic import PATTERNS, draw_pattern, pattern_arrays, write_pattern_dataset
from .weights import (
    LoadScope,
    TensorInfo,
    decode_weights,
    describe_weights,
    encode_weights,
    load_weights,
    read_weight_file,
    save_weights,
)

__all__ = [
    "DatasetManifest",
    "LabeledImage",
    "Split",
    "export_manifest",
    "load_dataset",
    "load_datasets",
    "split_arrays",
    "split_sizes",
    "stratified_split",
    "BadMagicError",
    "ChecksumError",
    "DatasetError",
    "ShapeAgreementError",
    "UnsupportedVersionError",
    "WeightFormatError",
    "atomic_writer",
    "write_text_atomic",
    "UndecodableImageError",
    "decode_image",
    "encode_image",
    "load_image",
    "resize_bilinear",
    "PATTERNS",
    "draw_pattern",
    "pattern_arrays",
    "write_pattern_dataset",
    "LoadScope",
    "TensorInfo",
    "decode_weights",
    "describe_weights",
    "encode_weights",
    "load_weights",
    "read_weight_file",
    "save_weights",
]
