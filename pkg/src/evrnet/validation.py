"""Input validation helpers shared across the package."""
from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when array dimensions violate an operation's contract."""


def require_nchw(x: np.ndarray, name: str = "tensor") -> np.ndarray:
    """Check that *x* is a rank-4 (n, c, h, w) array with all dims >= 1."""
    arr = np.asarray(x)
    if arr.ndim != 4:
        raise ShapeError(f"{name}: expected 4 dims (n, c, h, w), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"{name}: all dims must be >= 1, got shape {arr.shape}")
    return arr


def as_f32(x: np.ndarray) -> np.ndarray:
    """Return *x* as a C-contiguous float32 array (copying only if needed)."""
    return np.ascontiguousarray(x, dtype=np.float32)


def require_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def require_finite(x: np.ndarray, name: str = "tensor") -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name}: contains NaN or Inf")


def require_unit_range(x: np.ndarray, name: str = "image") -> None:
    lo, hi = float(x.min()), float(x.max())
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"{name}: pixel values must lie in [0, 1], got range [{lo:g}, {hi:g}]")
