"""PSNR and SSIM on RGB and Y (BT.601 full-range luma) channels.

SSIM uses the canonical parameterization: 11x11 Gaussian window with
sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1.0, valid-mode windowing,
averaged over windows and channels. Identical inputs score SSIM 1.0 and
PSNR +inf (reported as the math.inf sentinel).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .validation import ShapeError, require_nchw, require_same_shape

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# BT.601 full-range luma coefficients
_YR, _YG, _YB = 0.299, 0.587, 0.114


@dataclass(frozen=True)
class MetricResult:
    psnr_rgb: float
    ssim_rgb: float
    psnr_y: float
    ssim_y: float


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10 * log10(peak^2 / MSE) over all elements; +inf when MSE is zero."""
    a = require_nchw(a, "psnr a")
    b = require_nchw(b, "psnr b")
    require_same_shape(a, b, "psnr")
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


_WINDOW = _gaussian_window()


def _filter_valid(plane: np.ndarray) -> np.ndarray:
    win = sliding_window_view(plane, (SSIM_WINDOW, SSIM_WINDOW))
    return np.tensordot(win, _WINDOW, axes=([2, 3], [0, 1]))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM over valid window positions, channels, and batch."""
    a = require_nchw(a, "ssim a")
    b = require_nchw(b, "ssim b")
    require_same_shape(a, b, "ssim")
    n, c, h, w = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ShapeError(f"ssim: image {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    total = 0.0
    for bi in range(n):
        for ci in range(c):
            x = a[bi, ci].astype(np.float64)
            y = b[bi, ci].astype(np.float64)
            mu_x = _filter_valid(x)
            mu_y = _filter_valid(y)
            var_x = _filter_valid(x * x) - mu_x * mu_x
            var_y = _filter_valid(y * y) - mu_y * mu_y
            cov = _filter_valid(x * y) - mu_x * mu_y
            num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
            den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
            total += float(np.mean(num / den))
    return total / (n * c)


def rgb_to_y(x: np.ndarray) -> np.ndarray:
    """BT.601 full-range luma: Y = 0.299 R + 0.587 G + 0.114 B, shape (n, 1, h, w)."""
    x = require_nchw(x, "rgb_to_y input")
    if x.shape[1] != 3:
        raise ShapeError(f"rgb_to_y: expected 3 channels, got {x.shape[1]}")
    y = _YR * x[:, 0] + _YG * x[:, 1] + _YB * x[:, 2]
    return y[:, None].astype(np.float32)


def evaluate(reference: np.ndarray, test: np.ndarray) -> MetricResult:
    """All four scores for one frame pair (RGB inputs in [0, 1])."""
    ry, ty = rgb_to_y(reference), rgb_to_y(test)
    return MetricResult(
        psnr_rgb=psnr(reference, test),
        ssim_rgb=ssim(reference, test),
        psnr_y=psnr(ry, ty),
        ssim_y=ssim(ry, ty),
    )
