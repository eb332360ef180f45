"""Neural layer vocabulary: convolutions, PReLU, squeeze-excitation, resampling.

All ops are pure functions on float32 (n, c, h, w) arrays. Convolutions use
zero "same" padding of (k-1)/2 per side, so stride 1 preserves (h, w) and
stride 2 yields (ceil(h/2), ceil(w/2)). Given identical inputs the ops are
bit-deterministic: the reduction algorithm is fixed and single-threaded.

Each op accepts an optional :class:`MacCounter`; when given, the op adds the
multiply-accumulate cost of the work it actually performed, derived from the
runtime array shapes. The convention matches the analytic audit: convolutions
cost out*(in/groups)*kh*kw per output element, squeeze-excitation costs its
global pool plus the two gate products, everything else (bias adds, PReLU,
sigmoid, interpolation, pixel shuffle) is free.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .validation import ShapeError, require_nchw

# Window-tensor slab limit for the blocked convolution loop (float32 elements).
_CONV_SLAB_ELEMS = 16 << 20


class MacCounter:
    """Accumulates multiply-accumulate counts during an instrumented forward pass."""

    def __init__(self) -> None:
        self.total = 0

    def add(self, n: int) -> None:
        self.total += int(n)


@dataclass(frozen=True)
class ConvSpec:
    """Shape contract for a 2-D convolution layer."""

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]
    stride: int = 1
    groups: int = 1
    has_bias: bool = True

    def __post_init__(self) -> None:
        kh, kw = self.kernel
        if kh % 2 == 0 or kw % 2 == 0 or kh < 1 or kw < 1:
            raise ValueError(f"kernel sizes must be odd and positive, got {self.kernel}")
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if self.groups == 1:
            pass
        elif self.groups == self.in_channels:
            if self.out_channels != self.in_channels:
                raise ValueError(
                    f"depthwise conv requires in == out == groups, got "
                    f"in={self.in_channels} out={self.out_channels} groups={self.groups}"
                )
        else:
            raise ValueError(f"groups must be 1 or in_channels, got {self.groups}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be >= 1")

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels // self.groups, *self.kernel)


@dataclass(frozen=True)
class SESpec:
    """Shape contract for a squeeze-excitation unit."""

    channels: int
    reduction: int = 4

    def __post_init__(self) -> None:
        if self.reduction < 1:
            raise ValueError(f"reduction must be >= 1, got {self.reduction}")
        if self.channels % self.reduction != 0:
            raise ValueError(
                f"channels ({self.channels}) must be divisible by reduction ({self.reduction})"
            )

    @property
    def squeezed(self) -> int:
        return self.channels // self.reduction


def conv_out_hw(h: int, w: int, stride: int) -> tuple[int, int]:
    """Output spatial dims under "same" padding: ceil(input / stride)."""
    return (-(-h // stride), -(-w // stride))


def conv2d(
    x: np.ndarray,
    spec: ConvSpec,
    weights: np.ndarray,
    bias: np.ndarray | None = None,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """Cross-correlate *x* with *weights*, zero "same" padding.

    weights: (out, in/groups, kh, kw); bias: (out,) or None.
    """
    x = require_nchw(x, "conv2d input")
    if x.shape[1] != spec.in_channels:
        raise ShapeError(f"conv2d: input has {x.shape[1]} channels, spec wants {spec.in_channels}")
    weights = np.asarray(weights, dtype=np.float32)
    if weights.shape != spec.weight_shape:
        raise ShapeError(f"conv2d: weights shape {weights.shape}, spec wants {spec.weight_shape}")
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float32).reshape(-1)
        if bias.shape[0] != spec.out_channels:
            raise ShapeError(f"conv2d: bias has {bias.shape[0]} entries, spec wants {spec.out_channels}")

    n, c, h, w = x.shape
    kh, kw = spec.kernel
    s = spec.stride
    ho, wo = conv_out_hw(h, w, s)

    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = np.pad(np.ascontiguousarray(x, dtype=np.float32), ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]  # (n,c,ho,wo,kh,kw)

    out = np.empty((n, spec.out_channels, ho, wo), dtype=np.float32)
    # Blocked over output rows so the materialized window slab stays bounded.
    rows = max(1, _CONV_SLAB_ELEMS // max(1, n * c * wo * kh * kw))
    for r0 in range(0, ho, rows):
        r1 = min(ho, r0 + rows)
        slab = win[:, :, r0:r1]
        if spec.groups == 1:
            acc = np.tensordot(slab, weights, axes=([1, 4, 5], [1, 2, 3]))  # (n,r,wo,out)
            out[:, :, r0:r1] = acc.transpose(0, 3, 1, 2)
        else:  # depthwise: one filter per channel
            out[:, :, r0:r1] = np.einsum("ncrwij,cij->ncrw", slab, weights[:, 0], optimize=True)
    if bias is not None:
        out += bias.reshape(1, -1, 1, 1)
    if counter is not None:
        counter.add(n * spec.out_channels * ho * wo * (spec.in_channels // spec.groups) * kh * kw)
    return out


def depthwise_conv2d(
    x: np.ndarray,
    spec: ConvSpec,
    weights: np.ndarray,
    bias: np.ndarray | None = None,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """Per-channel convolution; output channel i depends only on input channel i."""
    if spec.groups != spec.in_channels:
        raise ShapeError(f"depthwise_conv2d: spec.groups ({spec.groups}) != in_channels ({spec.in_channels})")
    x = require_nchw(x, "depthwise input")
    if spec.groups != x.shape[1]:
        raise ShapeError(f"depthwise_conv2d: input has {x.shape[1]} channels, spec wants {spec.in_channels}")
    return conv2d(x, spec, weights, bias, counter)


def prelu(x: np.ndarray, slopes: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
    """PReLU with one learnable slope per channel: x if x > 0 else slope_c * x."""
    x = require_nchw(x, "prelu input")
    slopes = np.asarray(slopes, dtype=np.float32).reshape(-1)
    if slopes.shape[0] != x.shape[1]:
        raise ShapeError(f"prelu: {slopes.shape[0]} slopes for {x.shape[1]} channels")
    s = slopes.reshape(1, -1, 1, 1)
    return np.where(x > 0, x, (s * x).astype(np.float32))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign to stay overflow-free in float32.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def se_apply(
    x: np.ndarray,
    spec: SESpec,
    w1: np.ndarray,
    w2: np.ndarray,
    b1: np.ndarray | None = None,
    b2: np.ndarray | None = None,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """Squeeze-excitation channel gate.

    squeeze = per-channel global mean; gate = sigmoid(w2 @ relu(w1 @ squeeze + b1) + b2);
    out[c] = x[c] * gate[c]. w1: (c/r, c), w2: (c, c/r).
    """
    x = require_nchw(x, "se input")
    n, c, h, w = x.shape
    if c != spec.channels:
        raise ShapeError(f"se_apply: input has {c} channels, spec wants {spec.channels}")
    w1 = np.asarray(w1, dtype=np.float32)
    w2 = np.asarray(w2, dtype=np.float32)
    if w1.shape != (spec.squeezed, c):
        raise ShapeError(f"se_apply: w1 shape {w1.shape}, expected {(spec.squeezed, c)}")
    if w2.shape != (c, spec.squeezed):
        raise ShapeError(f"se_apply: w2 shape {w2.shape}, expected {(c, spec.squeezed)}")
    b1 = np.zeros(spec.squeezed, np.float32) if b1 is None else np.asarray(b1, np.float32).reshape(-1)
    b2 = np.zeros(c, np.float32) if b2 is None else np.asarray(b2, np.float32).reshape(-1)
    if b1.shape[0] != spec.squeezed or b2.shape[0] != c:
        raise ShapeError("se_apply: bias length mismatch")

    squeeze = x.mean(axis=(2, 3), dtype=np.float32)          # (n, c)
    z = squeeze @ w1.T + b1                                   # (n, c/r)
    z = np.maximum(z, 0.0)
    gate = _sigmoid(z @ w2.T + b2)                            # (n, c)
    if counter is not None:
        counter.add(n * (c * h * w + 2 * (c * c) // spec.reduction))
    return x * gate[:, :, None, None]


def upsample2x(x: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
    """Bilinear 2x upsampling, half-pixel centers (corners not aligned).

    Source coordinate for output index i is (i + 0.5)/2 - 0.5, edge-clamped,
    so the four interpolation weights are exactly {0.25, 0.75} in the interior.
    """
    x = require_nchw(x, "upsample input")
    n, c, h, w = x.shape

    def axis_gather(size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(2 * size, dtype=np.float64) + 0.5) / 2.0 - 0.5
        pos = np.clip(pos, 0.0, size - 1)
        i0 = np.floor(pos).astype(np.int64)
        frac = (pos - i0).astype(np.float32)
        i1 = np.minimum(i0 + 1, size - 1)
        return i0, i1, frac

    y0, y1, fy = axis_gather(h)
    x0, x1, fx = axis_gather(w)
    fy = fy.reshape(1, 1, -1, 1)
    fx = fx.reshape(1, 1, 1, -1)
    row0, row1 = x[:, :, y0], x[:, :, y1]
    top = row0[:, :, :, x0] * (1 - fx) + row0[:, :, :, x1] * fx
    bot = row1[:, :, :, x0] * (1 - fx) + row1[:, :, :, x1] * fx
    return (top * (1 - fy) + bot * fy).astype(np.float32)


def pixel_shuffle(x: np.ndarray, s: int, counter: MacCounter | None = None) -> np.ndarray:
    """Rearrange s*s channel groups into an s-times larger spatial grid.

    out[n][c][h*s+dy][w*s+dx] = x[n][c*s*s + dy*s + dx][h][w]; value-preserving.
    """
    x = require_nchw(x, "pixel_shuffle input")
    if s < 1:
        raise ValueError(f"pixel_shuffle: scale must be >= 1, got {s}")
    n, c, h, w = x.shape
    if c % (s * s) != 0:
        raise ShapeError(f"pixel_shuffle: {c} channels not divisible by s^2 = {s * s}")
    if s == 1:
        return x.copy()
    co = c // (s * s)
    out = x.reshape(n, co, s, s, h, w).transpose(0, 1, 4, 2, 5, 3).reshape(n, co, h * s, w * s)
    return np.ascontiguousarray(out)
