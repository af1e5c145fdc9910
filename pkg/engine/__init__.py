"""Tensor math: dense numpy tensors, layer primitives and their gradients."""

from .errors import (
    BanknoteError,
    GeometryError,
    MissingForwardStateError,
    NegativeVarianceError,
    ShapeMismatchError,
)
from .geometry import ConvGeometry, Padding
from .layers import (
    Activation,
    BatchNorm,
    Concat,
    Conv2D,
    Dense,
    DepthwiseConv2D,
    Layer,
    LayerGrads,
    PointwiseConv2D,
    Pool,
    ResidualAdd,
    Softmax,
)
from .ops import (
    ActivationKind,
    PoolKind,
    Tensor,
    activation,
    batchnorm_infer,
    concat,
    conv2d,
    cross_entropy,
    dense,
    depthwise_conv2d,
    pointwise_conv2d,
    pool,
    residual_add,
    softmax,
    softmax_cross_entropy_backward,
)

__all__ = [
    "BanknoteError",
    "GeometryError",
    "MissingForwardStateError",
    "NegativeVarianceError",
    "ShapeMismatchError",
    "ConvGeometry",
    "Padding",
    "Activation",
    "BatchNorm",
    "Concat",
    "Conv2D",
    "Dense",
    "DepthwiseConv2D",
    "Layer",
    "LayerGrads",
    "PointwiseConv2D",
    "Pool",
    "ResidualAdd",
    "Softmax",
    "ActivationKind",
    "PoolKind",
    "Tensor",
    "activation",
    "batchnorm_infer",
    "concat",
    "conv2d",
    "cross_entropy",
    "dense",
    "depthwise_conv2d",
    "pointwise_conv2d",
    "pool",
    "residual_add",
    "softmax",
    "softmax_cross_entropy_backward",
]
