"""Loop-only reference implementations the optimized code is checked against.

Deliberately slow and literal: scalar loops, no vectorized tricks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable

import numpy as np


def same_pads(size: int, kernel: int, stride: int) -> tuple[int, int]:
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return total // 2, total - total // 2


def conv2d_naive(x, kernel, bias, stride=1, padding="valid"):
    """Direct six-loop summation; out-of-bounds inputs are zero."""
    h, w, cin = x.shape
    kh, kw, _, cout = kernel.shape
    if padding == "same":
        top, _ = same_pads(h, kh, stride)
        left, _ = same_pads(w, kw, stride)
        out_h, out_w = math.ceil(h / stride), math.ceil(w / stride)
    else:
        top = left = 0
        out_h, out_w = (h - kh) // stride + 1, (w - kw) // stride + 1
    out = np.zeros((out_h, out_w, cout))
    for y in range(out_h):
        for xo in range(out_w):
            for co in range(cout):
                total = float(bias[co])
                for dy in range(kh):
                    for dx in range(kw):
                        iy, ix = y * stride + dy - top, xo * stride + dx - left
                        if 0 <= iy < h and 0 <= ix < w:
                            for ci in range(cin):
                                total += x[iy, ix, ci] * kernel[dy, dx, ci, co]
                out[y, xo, co] = total
    return out


def block_diagonal(kernel):
    """Depthwise Kh×Kw×C kernel as an equivalent Kh×Kw×C×C standard kernel."""
    kh, kw, c = kernel.shape
    full = np.zeros((kh, kw, c, c))
    for ch in range(c):
        full[:, :, ch, ch] = kernel[:, :, ch]
    return full


def dense_naive(x, weights, bias):
    n, m = weights.shape
    out = np.zeros(m)
    for j in range(m):
        total = float(bias[j])
        for i in range(n):
            total += x[i] * weights[i, j]
        out[j] = total
    return out


def pool_naive(x, kind, window, stride, padding="valid"):
    """max/avg pooling; `same` windows only see in-bounds inputs."""
    h, w, c = x.shape
    if padding == "same":
        top, _ = same_pads(h, window, stride)
        left, _ = same_pads(w, window, stride)
        out_h, out_w = math.ceil(h / stride), math.ceil(w / stride)
    else:
        top = left = 0
        out_h, out_w = (h - window) // stride + 1, (w - window) // stride + 1
    out = np.zeros((out_h, out_w, c))
    for y in range(out_h):
        for xo in range(out_w):
            for ch in range(c):
                vals = []
                for dy in range(window):
                    for dx in range(window):
                        iy, ix = y * stride + dy - top, xo * stride + dx - left
                        if 0 <= iy < h and 0 <= ix < w:
                            vals.append(x[iy, ix, ch])
                out[y, xo, ch] = max(vals) if kind == "max" else sum(vals) / len(vals)
    return out


def bilinear_naive(image, out_h, out_w):
    """Half-pixel-centre bilinear resize with edge clamping, one pixel at a time."""
    in_h, in_w, c = image.shape
    out = np.zeros((out_h, out_w, c))
    for y in range(out_h):
        sy = min(max((y + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1)
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, in_h - 1)
        fy = sy - y0
        for x in range(out_w):
            sx = min(max((x + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1)
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, in_w - 1)
            fx = sx - x0
            for ch in range(c):
                top = image[y0, x0, ch] * (1 - fx) + image[y0, x1, ch] * fx
                bottom = image[y1, x0, ch] * (1 - fx) + image[y1, x1, ch] * fx
                out[y, x, ch] = top * (1 - fy) + bottom * fy
    return out


def affine_naive(image, angle_deg=0.0, dx=0.0, dy=0.0, shear=0.0, zoom=1.0, flip=False):
    """Per-pixel inverse map with scalar trigonometry and nearest, edge-clamped sampling."""
    h, w, _ = image.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = math.radians(angle_deg)
    out = np.zeros_like(image)
    for y in range(h):
        for x in range(w):
            u, v = x - cx, y - cy
            if flip:
                u = -u
            u -= dx * w
            v -= dy * h
            u /= zoom
            v /= zoom
            u -= math.tan(shear) * v
            su = math.cos(theta) * u - math.sin(theta) * v
            sv = math.sin(theta) * u + math.cos(theta) * v
            sx = min(max(int(math.floor(su + cx + 0.5)), 0), w - 1)
            sy = min(max(int(math.floor(sv + cy + 0.5)), 0), h - 1)
            out[y, x] = image[sy, sx]
    return out


def confusion_count(true, pred, k):
    counts = [[0] * k for _ in range(k)]
    for t, p in zip(true, pred):
        counts[t][p] += 1
    return counts


def metrics_exact(counts):
    """Per-class (precision, recall, f1) as Fractions, 0 where undefined, plus accuracy."""
    k = len(counts)
    per_class = []
    for c in range(k):
        tp = counts[c][c]
        fp = sum(counts[r][c] for r in range(k)) - tp
        fn = sum(counts[c]) - tp
        p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        f = 2 * p * r / (p + r) if p + r else Fraction(0)
        per_class.append((p, r, f))
    total = sum(sum(row) for row in counts)
    accuracy = Fraction(sum(counts[c][c] for c in range(k)), total) if total else Fraction(0)
    return per_class, accuracy


def adam_scalar(theta, grads, lr, beta1=0.9, beta2=0.999, eps=1e-7):
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        theta = theta - lr * m_hat / (math.sqrt(v_hat) + eps)
    return theta


def numerical_gradient(f: Callable[[], float], x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central differences of f() with respect to x, perturbed in place."""
    grad = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"], op_flags=["readwrite"])
    while not it.finished:
        idx = it.multi_index
        original = x[idx]
        x[idx] = original + step
        plus = f()
        x[idx] = original - step
        minus = f()
        x[idx] = original
        grad[idx] = (plus - minus) / (2 * step)
        it.iternext()
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = np.linalg.norm(np.asarray(analytic, dtype=np.float64) - numeric)
    den = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(num / den)
