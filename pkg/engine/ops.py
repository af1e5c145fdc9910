"""Forward and backward math for every layer primitive.

Images are H×W×C, row-major with channels fastest. Every op also accepts a
leading batch axis (N×H×W×C, N×F) and then returns a batched result. All
functions are pure: they never modify their arguments.

The convolution kernels gather strided windows as a read-only view
(`sliding_window_view`) and contract them against the kernel in a single
`tensordot`/`einsum`, which lowers to one BLAS matrix multiply per call. The
backward pass scatters window gradients back by kernel offset (col2im), so the
Python-level loop runs over Kh×Kw offsets only.
"""

from __future__ import annotations

from enum import Enum
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from config.app_config import BATCHNORM_EPS, LOG_CLIP_EPS

from .errors import NegativeVarianceError, ShapeMismatchError
from .geometry import ConvGeometry, Padding

Tensor = np.ndarray


class ActivationKind(str, Enum):
    RELU = "relu"
    RELU6 = "relu6"


class PoolKind(str, Enum):
    MAX = "max"
    AVG = "avg"
    GLOBAL_AVG = "global_avg"


# ---------------------------------------------------------------------------
# Shape helpers
# ---------------------------------------------------------------------------

def _as_batch(x: Tensor, rank: int, what: str) -> tuple[Tensor, bool]:
    """Return (batched view, was_single) for an input of the given unbatched rank."""
    x = np.asarray(x)
    if x.ndim == rank:
        return x[np.newaxis], True
    if x.ndim == rank + 1:
        return x, False
    raise ShapeMismatchError(f"{what} rank", f"{rank} or {rank + 1} dims", x.shape)


def _unbatch(x: Tensor, single: bool) -> Tensor:
    return x[0] if single else x


def _pad_spatial(x: Tensor, geom: ConvGeometry, fill: float = 0.0) -> tuple[Tensor, tuple[int, int, int, int]]:
    top, bottom, left, right = geom.pads(x.shape[1], x.shape[2])
    if top == bottom == left == right == 0:
        return x, (0, 0, 0, 0)
    padded = np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0)), constant_values=fill)
    return padded, (top, bottom, left, right)


def _windows(padded: Tensor, geom: ConvGeometry, out_hw: tuple[int, int]) -> Tensor:
    """Strided patch view of shape N×H'×W'×C×Kh×Kw (no copy)."""
    view = sliding_window_view(padded, (geom.kernel_h, geom.kernel_w), axis=(1, 2))
    s = geom.stride
    return view[:, ::s, ::s][:, : out_hw[0], : out_hw[1]]


def _col2im(cols: Tensor, padded_shape: tuple[int, ...], geom: ConvGeometry) -> Tensor:
    """Scatter-add window gradients (N×H'×W'×Kh×Kw×C) into a padded-input gradient."""
    grad = np.zeros(padded_shape, dtype=cols.dtype)
    _, out_h, out_w = cols.shape[:3]
    s = geom.stride
    for dy in range(geom.kernel_h):
        for dx in range(geom.kernel_w):
            grad[:, dy : dy + s * (out_h - 1) + 1 : s, dx : dx + s * (out_w - 1) + 1 : s, :] += cols[:, :, :, dy, dx, :]
    return grad


def _crop(grad_padded: Tensor, pads: tuple[int, int, int, int], height: int, width: int) -> Tensor:
    top, _, left, _ = pads
    return grad_padded[:, top : top + height, left : left + width, :]


def _check_kernel(geom: ConvGeometry, kh: int, kw: int) -> None:
    if (kh, kw) != (geom.kernel_h, geom.kernel_w):
        raise ShapeMismatchError("kernel spatial size vs geometry", (geom.kernel_h, geom.kernel_w), (kh, kw))


def conv_output_shape(input_shape: Sequence[int], geom: ConvGeometry, channels: int) -> tuple[int, int, int]:
    out_h, out_w = geom.output_size(input_shape[0], input_shape[1])
    return out_h, out_w, channels


# ---------------------------------------------------------------------------
# Standard convolution
# ---------------------------------------------------------------------------

def _check_conv2d(x: Tensor, kernel: Tensor, bias: Tensor, geom: ConvGeometry) -> None:
    if kernel.ndim != 4:
        raise ShapeMismatchError("conv2d kernel rank", "Kh×Kw×Cin×Cout", kernel.shape)
    _check_kernel(geom, kernel.shape[0], kernel.shape[1])
    if kernel.shape[2] != x.shape[-1]:
        raise ShapeMismatchError("conv2d input channels vs kernel", kernel.shape, x.shape)
    if bias.shape != (kernel.shape[3],):
        raise ShapeMismatchError("conv2d bias", (kernel.shape[3],), bias.shape)


def conv2d(input: Tensor, kernel: Tensor, bias: Tensor, geom: ConvGeometry) -> Tensor:
    xb, single = _as_batch(input, 3, "conv2d input")
    kernel, bias = np.asarray(kernel), np.asarray(bias)
    _check_conv2d(xb, kernel, bias, geom)
    out_hw = geom.output_size(xb.shape[1], xb.shape[2])
    padded, _ = _pad_spatial(xb, geom)
    win = _windows(padded, geom, out_hw)
    out = np.tensordot(win, kernel, axes=([3, 4, 5], [2, 0, 1])) + bias
    return _unbatch(out, single)


def conv2d_backward(
    input: Tensor, kernel: Tensor, geom: ConvGeometry, grad_output: Tensor
) -> tuple[Tensor, Tensor, Tensor]:
    """Return (grad_input, grad_kernel, grad_bias)."""
    xb, single = _as_batch(input, 3, "conv2d input")
    gb, _ = _as_batch(grad_output, 3, "conv2d grad_output")
    out_hw = geom.output_size(xb.shape[1], xb.shape[2])
    padded, pads = _pad_spatial(xb, geom)
    win = _windows(padded, geom, out_hw)
    grad_bias = gb.sum(axis=(0, 1, 2))
    grad_kernel = np.tensordot(win, gb, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
    cols = np.tensordot(gb, kernel, axes=([3], [3]))
    grad_input = _crop(_col2im(cols, padded.shape, geom), pads, xb.shape[1], xb.shape[2])
    return _unbatch(grad_input, single), grad_kernel, grad_bias


# ---------------------------------------------------------------------------
# Depthwise convolution
# ---------------------------------------------------------------------------

def _check_depthwise(x: Tensor, kernel: Tensor, bias: Tensor, geom: ConvGeometry) -> None:
    if kernel.ndim != 3:
        raise ShapeMismatchError("depthwise kernel rank", "Kh×Kw×C", kernel.shape)
    _check_kernel(geom, kernel.shape[0], kernel.shape[1])
    if kernel.shape[2] != x.shape[-1]:
        raise ShapeMismatchError("depthwise input channels vs kernel", kernel.shape, x.shape)
    if bias.shape != (kernel.shape[2],):
        raise ShapeMismatchError("depthwise bias", (kernel.shape[2],), bias.shape)


def depthwise_conv2d(input: Tensor, kernel: Tensor, bias: Tensor, geom: ConvGeometry) -> Tensor:
    xb, single = _as_batch(input, 3, "depthwise input")
    kernel, bias = np.asarray(kernel), np.asarray(bias)
    _check_depthwise(xb, kernel, bias, geom)
    out_hw = geom.output_size(xb.shape[1], xb.shape[2])
    padded, _ = _pad_spatial(xb, geom)
    win = _windows(padded, geom, out_hw)
    out = np.einsum("nhwcij,ijc->nhwc", win, kernel, optimize=True) + bias
    return _unbatch(out, single)


def depthwise_conv2d_backward(
    input: Tensor, kernel: Tensor, geom: ConvGeometry, grad_output: Tensor
) -> tuple[Tensor, Tensor, Tensor]:
    xb, single = _as_batch(input, 3, "depthwise input")
    gb, _ = _as_batch(grad_output, 3, "depthwise grad_output")
    out_hw = geom.output_size(xb.shape[1], xb.shape[2])
    padded, pads = _pad_spatial(xb, geom)
    win = _windows(padded, geom, out_hw)
    grad_bias = gb.sum(axis=(0, 1, 2))
    grad_kernel = np.einsum("nhwcij,nhwc->ijc", win, gb, optimize=True)
    cols = gb[:, :, :, np.newaxis, np.newaxis, :] * kernel
    grad_input = _crop(_col2im(cols, padded.shape, geom), pads, xb.shape[1], xb.shape[2])
    return _unbatch(grad_input, single), grad_kernel, grad_bias


# ---------------------------------------------------------------------------
# Pointwise convolution and dense (shared channel-mixing matmul)
# ---------------------------------------------------------------------------

def _check_linear(what: str, x: Tensor, weights: Tensor, bias: Tensor) -> None:
    if weights.ndim != 2 or weights.shape[0] != x.shape[-1]:
        raise ShapeMismatchError(f"{what} weights vs input", (x.shape[-1], "M"), weights.shape)
    if bias.shape != (weights.shape[1],):
        raise ShapeMismatchError(f"{what} bias", (weights.shape[1],), bias.shape)


def _linear_backward(x: Tensor, weights: Tensor, grad_output: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    n_in, n_out = weights.shape
    flat_x = x.reshape(-1, n_in)
    flat_g = grad_output.reshape(-1, n_out)
    return grad_output @ weights.T, flat_x.T @ flat_g, flat_g.sum(axis=0)


def pointwise_conv2d(input: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
    xb, single = _as_batch(input, 3, "pointwise input")
    kernel, bias = np.asarray(kernel), np.asarray(bias)
    _check_linear("pointwise", xb, kernel, bias)
    return _unbatch(xb @ kernel + bias, single)


def pointwise_conv2d_backward(input: Tensor, kernel: Tensor, grad_output: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    return _linear_backward(np.asarray(input), np.asarray(kernel), np.asarray(grad_output))


def dense(input: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    xb, single = _as_batch(input, 1, "dense input")
    weights, bias = np.asarray(weights), np.asarray(bias)
    _check_linear("dense", xb, weights, bias)
    return _unbatch(xb @ weights + bias, single)


def dense_backward(input: Tensor, weights: Tensor, grad_output: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    return _linear_backward(np.asarray(input), np.asarray(weights), np.asarray(grad_output))


# ---------------------------------------------------------------------------
# Batchnorm (inference form)
# ---------------------------------------------------------------------------

def _check_channelwise(x: Tensor, **stats: Tensor) -> None:
    channels = x.shape[-1]
    for name, value in stats.items():
        if value.shape != (channels,):
            raise ShapeMismatchError(f"batchnorm {name}", (channels,), value.shape)


def batchnorm_infer(
    input: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    eps: float = BATCHNORM_EPS,
) -> Tensor:
    x = np.asarray(input)
    gamma, beta = np.asarray(gamma), np.asarray(beta)
    running_mean, running_var = np.asarray(running_mean), np.asarray(running_var)
    _check_channelwise(x, gamma=gamma, beta=beta, running_mean=running_mean, running_var=running_var)
    if np.any(running_var < 0):
        raise NegativeVarianceError(f"running variance must be non-negative, min is {running_var.min()}")
    return gamma * (x - running_mean) / np.sqrt(running_var + eps) + beta


def batchnorm_backward(
    input: Tensor,
    gamma: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    grad_output: Tensor,
    eps: float = BATCHNORM_EPS,
) -> tuple[Tensor, Tensor, Tensor]:
    """Return (grad_input, grad_gamma, grad_beta); running statistics are not trained."""
    x, g = np.asarray(input), np.asarray(grad_output)
    inv_std = 1.0 / np.sqrt(running_var + eps)
    x_hat = (x - running_mean) * inv_std
    reduce_axes = tuple(range(x.ndim - 1))
    return g * gamma * inv_std, (g * x_hat).sum(axis=reduce_axes), g.sum(axis=reduce_axes)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

def activation(input: Tensor, kind: ActivationKind | str) -> Tensor:
    kind = ActivationKind(kind)
    x = np.asarray(input)
    if kind is ActivationKind.RELU6:
        return np.clip(x, 0.0, 6.0)
    return np.maximum(x, 0.0)


def activation_backward(input: Tensor, kind: ActivationKind | str, grad_output: Tensor) -> Tensor:
    kind = ActivationKind(kind)
    x = np.asarray(input)
    mask = x > 0
    if kind is ActivationKind.RELU6:
        mask &= x < 6.0
    return np.asarray(grad_output) * mask


# ---------------------------------------------------------------------------
# Pooling
# ---------------------------------------------------------------------------

def _pool_geometry(window: int, stride: int | None, padding: Padding | str) -> ConvGeometry:
    return ConvGeometry(window, window, stride or window, Padding(padding))


def _avg_counts(xb: Tensor, geom: ConvGeometry, out_hw: tuple[int, int]) -> Tensor:
    """Number of in-bounds inputs under each window, shaped 1×H'×W'×1."""
    ones = np.ones((1, xb.shape[1], xb.shape[2], 1), dtype=xb.dtype)
    padded, _ = _pad_spatial(ones, geom)
    return _windows(padded, geom, out_hw).sum(axis=(4, 5))


def pool(
    input: Tensor,
    kind: PoolKind | str,
    window: int = 2,
    stride: int | None = None,
    padding: Padding | str = Padding.VALID,
) -> Tensor:
    """max/avg pooling over square windows, or global average to a length-C vector.

    `same` average pooling divides by the number of in-bounds inputs; `same`
    max pooling never selects padding.
    """
    kind = PoolKind(kind)
    xb, single = _as_batch(input, 3, "pool input")
    if kind is PoolKind.GLOBAL_AVG:
        return _unbatch(xb.mean(axis=(1, 2)), single)
    geom = _pool_geometry(window, stride, padding)
    out_hw = geom.output_size(xb.shape[1], xb.shape[2])
    if kind is PoolKind.MAX:
        padded, _ = _pad_spatial(xb.astype(np.result_type(xb, np.float32), copy=False), geom, fill=-np.inf)
        return _unbatch(_windows(padded, geom, out_hw).max(axis=(4, 5)), single)
    padded, _ = _pad_spatial(xb, geom)
    sums = _windows(padded, geom, out_hw).sum(axis=(4, 5))
    return _unbatch(sums / _avg_counts(xb, geom, out_hw), single)


def pool_backward(
    input: Tensor,
    kind: PoolKind | str,
    grad_output: Tensor,
    window: int = 2,
    stride: int | None = None,
    padding: Padding | str = Padding.VALID,
) -> Tensor:
    kind = PoolKind(kind)
    xb, single = _as_batch(input, 3, "pool input")
    if kind is PoolKind.GLOBAL_AVG:
        gb = np.asarray(grad_output).reshape(xb.shape[0], 1, 1, xb.shape[3])
        area = xb.shape[1] * xb.shape[2]
        return _unbatch(np.broadcast_to(gb / area, xb.shape).copy(), single)

    gb, _ = _as_batch(grad_output, 3, "pool grad_output")
    geom = _pool_geometry(window, stride, padding)
    out_hw = geom.output_size(xb.shape[1], xb.shape[2])
    kh, kw = geom.kernel_h, geom.kernel_w
    if kind is PoolKind.MAX:
        padded, pads = _pad_spatial(xb.astype(np.result_type(xb, np.float32), copy=False), geom, fill=-np.inf)
        flat = _windows(padded, geom, out_hw).reshape(*gb.shape, kh * kw)
        winner = flat.argmax(axis=-1)
        mask = np.arange(kh * kw) == winner[..., np.newaxis]
        cols = (mask * gb[..., np.newaxis]).reshape(*gb.shape, kh, kw)
    else:
        padded, pads = _pad_spatial(xb, geom)
        share = gb / _avg_counts(xb, geom, out_hw)
        cols = np.broadcast_to(share[..., np.newaxis, np.newaxis], (*gb.shape, kh, kw))
    cols = cols.transpose(0, 1, 2, 4, 5, 3)
    grad_padded = _col2im(np.ascontiguousarray(cols, dtype=gb.dtype), padded.shape, geom)
    return _unbatch(_crop(grad_padded, pads, xb.shape[1], xb.shape[2]), single)


# ---------------------------------------------------------------------------
# Merge ops
# ---------------------------------------------------------------------------

def residual_add(a: Tensor, b: Tensor) -> Tensor:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError("residual add operands", a.shape, b.shape)
    return a + b


def concat(tensors: Sequence[Tensor]) -> Tensor:
    """Concatenate along the channel (last) axis; spatial dims must agree."""
    arrays = [np.asarray(t) for t in tensors]
    if not arrays:
        raise ShapeMismatchError("concat inputs", "at least one tensor", "none")
    lead = arrays[0].shape[:-1]
    for arr in arrays[1:]:
        if arr.shape[:-1] != lead:
            raise ShapeMismatchError("concat spatial dims", lead, arr.shape[:-1])
    return np.concatenate(arrays, axis=-1)


def concat_backward(channel_counts: Sequence[int], grad_output: Tensor) -> list[Tensor]:
    bounds = np.cumsum(channel_counts)[:-1]
    return np.split(np.asarray(grad_output), bounds, axis=-1)


# ---------------------------------------------------------------------------
# Softmax and categorical cross-entropy
# ---------------------------------------------------------------------------

def softmax(logits: Tensor) -> Tensor:
    z = np.asarray(logits)
    if z.ndim == 0 or z.shape[-1] == 0:
        raise ShapeMismatchError("softmax logits", "K >= 1 classes", z.shape)
    shifted = np.exp(z - z.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def softmax_backward(probs: Tensor, grad_output: Tensor) -> Tensor:
    p, g = np.asarray(probs), np.asarray(grad_output)
    return p * (g - (g * p).sum(axis=-1, keepdims=True))


def cross_entropy(probs: Tensor, one_hot_label: Tensor, eps_clip: float = LOG_CLIP_EPS) -> float | Tensor:
    """−Σ label·ln(max(p, ε)); a scalar for one example, one value per row for a batch."""
    p, y = np.asarray(probs), np.asarray(one_hot_label)
    if p.shape != y.shape:
        raise ShapeMismatchError("cross-entropy probs vs label", p.shape, y.shape)
    losses = -(y * np.log(np.maximum(p, eps_clip))).sum(axis=-1)
    return float(losses) if losses.ndim == 0 else losses


def softmax_cross_entropy_backward(probs: Tensor, one_hot_label: Tensor) -> Tensor:
    """Fused gradient of mean categorical cross-entropy wrt the softmax logits."""
    p, y = np.asarray(probs), np.asarray(one_hot_label)
    if p.ndim == 1:
        return p - y
    return (p - y) / p.shape[0]
