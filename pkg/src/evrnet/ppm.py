"""Binary P6 PPM image I/O.

8-bit samples map to [0, 1] by /255 on read and round-half-up * 255 on write,
so a write/read round trip of 8-bit-exact data is lossless.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .validation import ShapeError, require_nchw


def read_ppm(path) -> np.ndarray:
    """Read a maxval-255 P6 file as a (1, 3, h, w) float32 array in [0, 1]."""
    data = Path(path).read_bytes()

    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":  # comment runs to end of line
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PPM header")
        return data[start:pos]

    if token() != b"P6":
        raise ValueError(f"{path}: not a binary P6 PPM file")
    w, h, maxval = int(token()), int(token()), int(token())
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PPM supported, got maxval {maxval}")
    pos += 1  # single whitespace after maxval
    raster = data[pos : pos + 3 * w * h]
    if len(raster) != 3 * w * h:
        raise ValueError(f"{path}: raster holds {len(raster)} bytes, expected {3 * w * h}")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3)
    return (img.transpose(2, 0, 1)[None].astype(np.float32)) / np.float32(255.0)


def write_ppm(path, frame: np.ndarray) -> None:
    """Write a (1, 3, h, w) [0, 1] array as P6; quantization is round-half-up."""
    frame = require_nchw(frame, "ppm frame")
    if frame.shape[0] != 1 or frame.shape[1] != 3:
        raise ShapeError(f"write_ppm: expected (1, 3, h, w), got {frame.shape}")
    _, _, h, w = frame.shape
    scaled = np.floor(frame[0].astype(np.float64) * 255.0 + 0.5)
    bytes8 = np.clip(scaled, 0, 255).astype(np.uint8).transpose(1, 2, 0)
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(bytes8.tobytes())
