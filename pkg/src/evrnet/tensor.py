"""Rank-4 tensor primitives and the ``.evrt`` raw tensor file format.

Every value flowing through the engine is a dense float32 array laid out
(n, c, h, w), n-major. Operations here are pure: inputs are never modified
and results are freshly allocated, so tensors can be shared across threads.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .validation import ShapeError, as_f32, require_finite, require_nchw, require_same_shape

EVRT_MAGIC = b"EVRT"
EVRT_VERSION = 1


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Validate and canonicalize *x*: rank-4, dims >= 1, finite, float32, C-order."""
    arr = as_f32(require_nchw(x, name))
    require_finite(arr, name)
    return arr


def zeros(n: int, c: int, h: int, w: int) -> np.ndarray:
    return np.zeros((n, c, h, w), dtype=np.float32)


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stack *b*'s channels after *a*'s; batch and spatial dims must agree."""
    a = require_nchw(a, "concat lhs")
    b = require_nchw(b, "concat rhs")
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ShapeError(f"concat_channels: incompatible shapes {a.shape} vs {b.shape}")
    out = np.concatenate([as_f32(a), as_f32(b)], axis=1)
    require_finite(out, "concat_channels result")
    return out


def elementwise_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = require_nchw(a, "add lhs")
    b = require_nchw(b, "add rhs")
    require_same_shape(a, b, "elementwise_add")
    out = as_f32(a) + as_f32(b)
    require_finite(out, "elementwise_add result")
    return out


def elementwise_sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = require_nchw(a, "sub lhs")
    b = require_nchw(b, "sub rhs")
    require_same_shape(a, b, "elementwise_sub")
    out = as_f32(a) - as_f32(b)
    require_finite(out, "elementwise_sub result")
    return out


def channel_slice(x: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Copy channels [start, stop) out of *x*."""
    x = require_nchw(x, "channel_slice input")
    if not (0 <= start < stop <= x.shape[1]):
        raise ShapeError(f"channel_slice: bad range [{start}, {stop}) for {x.shape[1]} channels")
    return np.ascontiguousarray(x[:, start:stop])


def save_tensor(x: np.ndarray, path) -> None:
    """Write *x* to an ``.evrt`` file (bit-exact little-endian float32)."""
    arr = as_tensor(x, "save_tensor input")
    with open(path, "wb") as f:
        f.write(EVRT_MAGIC)
        f.write(struct.pack("<I", EVRT_VERSION))
        f.write(struct.pack("<4I", *arr.shape))
        f.write(arr.astype("<f4", copy=False).tobytes())


def load_tensor(path) -> np.ndarray:
    """Read an ``.evrt`` file written by :func:`save_tensor`."""
    data = Path(path).read_bytes()
    if len(data) < 24:
        raise ValueError(f"{path}: truncated tensor file")
    if data[:4] != EVRT_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {EVRT_MAGIC!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != EVRT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    dims = struct.unpack_from("<4I", data, 8)
    count = int(np.prod(dims))
    payload = data[24:]
    if len(payload) != 4 * count:
        raise ValueError(f"{path}: payload holds {len(payload) // 4} floats, header says {count}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return as_tensor(arr, str(path))
