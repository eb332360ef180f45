"""Input degradation synthesis: Gaussian noise, salt-and-pepper impulse noise,
their mixture, and an 8x8 block-DCT compression proxy.

Pixels are [0, 1] floats throughout. Randomness comes from a counter-based
generator keyed by (seed, stream, frame index, element index, draw index), so
results are independent of evaluation order, reproducible from the key alone,
and frames never couple temporally. The generator is a murmur3-finalizer
chain (documented in docs/FORMATS.md so other implementations can reproduce
it); uniform draws map a u32 to (u + 0.5) / 2^32 and Gaussian draws apply
Box-Muller to two uniforms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import require_nchw, require_unit_range

STREAM_AWGN = 1
STREAM_SNP = 2

_MASK32 = np.uint64(0xFFFFFFFF)
_GOLDEN = 0x9E3779B9
_QUANT_BASE = 0.5  # block_compress step = _QUANT_BASE * (101 - Q) / 100


@dataclass(frozen=True)
class DegradeSpec:
    """One degradation recipe: AWGN variance, S&P density, optional quality factor."""

    awgn_var: float = 0.0
    snp_density: float = 0.0
    quality: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.awgn_var < 0:
            raise ValueError(f"awgn_var must be >= 0, got {self.awgn_var}")
        if not 0.0 <= self.snp_density <= 1.0:
            raise ValueError(f"snp_density must be in [0, 1], got {self.snp_density}")
        if self.quality is not None and not 1 <= int(self.quality) <= 100:
            raise ValueError(f"quality must be in 1..100, got {self.quality}")


def _mix(h: np.ndarray) -> np.ndarray:
    # murmur3 finalizer on uint64 arrays masked to 32 bits
    h = (h ^ (h >> np.uint64(16))) & _MASK32
    h = (h * np.uint64(0x85EBCA6B)) & _MASK32
    h = (h ^ (h >> np.uint64(13))) & _MASK32
    h = (h * np.uint64(0xC2B2AE35)) & _MASK32
    h = (h ^ (h >> np.uint64(16))) & _MASK32
    return h


def _mix_scalar(h: int) -> int:
    h = (h ^ (h >> 16)) & 0xFFFFFFFF
    h = (h * 0x85EBCA6B) & 0xFFFFFFFF
    h = (h ^ (h >> 13)) & 0xFFFFFFFF
    h = (h * 0xC2B2AE35) & 0xFFFFFFFF
    return (h ^ (h >> 16)) & 0xFFFFFFFF


def counter_uniform(seed: int, stream: int, frame: int, index: np.ndarray, draw: int) -> np.ndarray:
    """Order-independent uniform draws in (0, 1), one per entry of *index*.

    Chain: mix(seed_lo ^ 0x9E3779B9), then mix-in seed_hi, stream, frame,
    index, draw, in that order; the final u32 maps to (u + 0.5) / 2^32.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    h0 = _mix_scalar((seed & 0xFFFFFFFF) ^ _GOLDEN)
    h0 = _mix_scalar(h0 ^ (seed >> 32))
    h0 = _mix_scalar(h0 ^ (int(stream) & 0xFFFFFFFF))
    h0 = _mix_scalar(h0 ^ (int(frame) & 0xFFFFFFFF))
    idx = np.asarray(index, dtype=np.uint64)
    h = _mix(np.uint64(h0) ^ idx)
    h = _mix(h ^ np.uint64(int(draw) & 0xFFFFFFFF))
    return (h.astype(np.float64) + 0.5) * 2.0**-32


def _gaussian(seed: int, frame: int, count: int) -> np.ndarray:
    idx = np.arange(count, dtype=np.uint64)
    u1 = counter_uniform(seed, STREAM_AWGN, frame, idx, 0)
    u2 = counter_uniform(seed, STREAM_AWGN, frame, idx, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def add_awgn(x: np.ndarray, var: float, seed: int, frame_offset: int = 0) -> np.ndarray:
    """Additive white Gaussian noise with variance *var*, clamped back to [0, 1].

    Batch item b is keyed as frame (frame_offset + b); one draw per element.
    """
    x = require_nchw(x, "awgn input")
    require_unit_range(x, "awgn input")
    if var < 0:
        raise ValueError(f"awgn variance must be >= 0, got {var}")
    x = np.ascontiguousarray(x, dtype=np.float32)
    if var == 0:
        return x.copy()
    sigma = float(np.sqrt(var))
    n, c, h, w = x.shape
    out = np.empty_like(x)
    for b in range(n):
        noise = _gaussian(seed, frame_offset + b, c * h * w).reshape(c, h, w)
        out[b] = np.clip(x[b] + sigma * noise.astype(np.float32), 0.0, 1.0)
    return out


def add_salt_pepper(x: np.ndarray, density: float, seed: int, frame_offset: int = 0) -> np.ndarray:
    """Replace each pixel with probability *density* by 0 or 1 (equal odds).

    A replaced pixel changes jointly across all channels (classic impulse
    noise); pixel index is h*W + w within the frame.
    """
    x = require_nchw(x, "s&p input")
    require_unit_range(x, "s&p input")
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"s&p density must be in [0, 1], got {density}")
    x = np.ascontiguousarray(x, dtype=np.float32)
    if density == 0:
        return x.copy()
    n, c, h, w = x.shape
    idx = np.arange(h * w, dtype=np.uint64)
    out = x.copy()
    for b in range(n):
        frame = frame_offset + b
        hit = counter_uniform(seed, STREAM_SNP, frame, idx, 0) < density
        salt = counter_uniform(seed, STREAM_SNP, frame, idx, 1) < 0.5
        value = np.where(salt, np.float32(1.0), np.float32(0.0)).reshape(h, w)
        mask = hit.reshape(h, w)
        out[b][:, mask] = value[mask]
    return out


def add_mixed(x: np.ndarray, var: float, density: float, seed: int, frame_offset: int = 0) -> np.ndarray:
    """AWGN first, then salt-and-pepper, so the impulses survive intact."""
    return add_salt_pepper(add_awgn(x, var, seed, frame_offset), density, seed, frame_offset)


def _dct_matrix() -> np.ndarray:
    # Orthonormal 8x8 DCT-II: M[k, i] = c_k * cos(pi * (2i + 1) * k / 16)
    k = np.arange(8).reshape(-1, 1).astype(np.float64)
    i = np.arange(8).reshape(1, -1).astype(np.float64)
    m = np.cos(np.pi * (2 * i + 1) * k / 16.0)
    m[0] *= np.sqrt(1.0 / 8.0)
    m[1:] *= np.sqrt(2.0 / 8.0)
    return m


_DCT_M = _dct_matrix()


def quant_step(quality: int) -> float:
    return _QUANT_BASE * (101 - quality) / 100.0


def block_compress(x: np.ndarray, quality: int) -> np.ndarray:
    """Blocking-artifact proxy: per 8x8 block per channel, DCT-II, uniform
    quantization with step 0.5*(101-Q)/100, inverse DCT, clamp to [0, 1].

    Lower Q means a coarser step and stronger artifacts. Edges are replicated
    out to a multiple of 8 and cropped back afterwards.
    """
    x = require_nchw(x, "compress input")
    require_unit_range(x, "compress input")
    quality = int(quality)
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in 1..100, got {quality}")
    n, c, h, w = x.shape
    ph, pw = (-h) % 8, (-w) % 8
    xp = np.pad(x.astype(np.float64), ((0, 0), (0, 0), (0, ph), (0, pw)), mode="edge")
    hb, wb = xp.shape[2] // 8, xp.shape[3] // 8
    blocks = xp.reshape(n, c, hb, 8, wb, 8)
    coef = np.einsum("ki,lj,ncaibj->ncakbl", _DCT_M, _DCT_M, blocks, optimize=True)
    step = quant_step(quality)
    coef = np.rint(coef / step) * step
    rec = np.einsum("ki,lj,ncakbl->ncaibj", _DCT_M, _DCT_M, coef, optimize=True)
    rec = rec.reshape(n, c, hb * 8, wb * 8)[:, :, :h, :w]
    return np.clip(rec, 0.0, 1.0).astype(np.float32)


def apply_spec(x: np.ndarray, spec: DegradeSpec, frame_offset: int = 0) -> np.ndarray:
    """Full recipe in transmission order: compression, then AWGN, then S&P."""
    out = x
    if spec.quality is not None:
        out = block_compress(out, spec.quality)
    if spec.awgn_var > 0:
        out = add_awgn(out, spec.awgn_var, spec.seed, frame_offset)
    if spec.snp_density > 0:
        out = add_salt_pepper(out, spec.snp_density, spec.seed, frame_offset)
    if spec.quality is None and spec.awgn_var == 0 and spec.snp_density == 0:
        out = np.ascontiguousarray(out, dtype=np.float32).copy()
    return out
