"""Network assembly: convolutional units, encoder-decoder modules, the full
restoration graph, and the auto-regressive per-frame loop.

The graph takes the current frame, the previous frame, and a 2-channel latent
frame, and produces the restored frame plus the next latent frame. Alignment,
differential, and fusion share one encoder-decoder template and differ only in
input channels and in how many convolutional units (CUs) they stack.

``iter_plan`` enumerates every layer in a fixed, documented order
(alignment, projection, differential, fusion, heads; within a module:
encoder, CUs, decoder). Weight naming, random init, file validation, and the
compute audit are all derived from this one enumeration so they cannot drift.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import ConvSpec, MacCounter, SESpec, conv2d, pixel_shuffle, prelu, se_apply, upsample2x
from .tensor import concat_channels, elementwise_add, elementwise_sub, zeros
from .validation import ShapeError, require_nchw

LATENT_CHANNELS = 2
SE_REDUCTION = 4

# Resolution domains a layer's *output* lives in, relative to the input frame.
FULL, HALF, UPSCALED = "full", "half", "upscaled"


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture hyperparameters.

    d: trunk channel width; depths: CU counts (alignment, differential,
    fusion); cu_variant: "single" (one 7x7 depthwise) or "multi" (parallel
    3/5/7 depthwise branches); upsample_factor: 1, 2, or 4 (super-resolution
    output scale).
    """

    d: int = 32
    depths: tuple[int, int, int] = (5, 2, 2)
    cu_variant: str = "multi"
    use_se: bool = True
    upsample_factor: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "depths", tuple(int(n) for n in self.depths))
        if len(self.depths) != 3 or min(self.depths) < 1:
            raise ValueError(f"depths must be three counts >= 1, got {self.depths}")
        if self.cu_variant not in ("single", "multi"):
            raise ValueError(f"cu_variant must be 'single' or 'multi', got {self.cu_variant!r}")
        if self.upsample_factor not in (1, 2, 4):
            raise ValueError(f"upsample_factor must be 1, 2, or 4, got {self.upsample_factor}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.use_se and self.d % SE_REDUCTION != 0:
            raise ValueError(f"d ({self.d}) must be divisible by the SE reduction {SE_REDUCTION}")
        s2 = self.upsample_factor ** 2
        if self.d % s2 != 0:
            raise ValueError(f"d ({self.d}) must be divisible by upsample_factor^2 ({s2})")

    @property
    def alignment_in_channels(self) -> int:
        return 3 + 3 + LATENT_CHANNELS


@dataclass(frozen=True)
class StreamState:
    """Recurrent per-stream state: previous input frame and previous latent frame."""

    prev_frame: np.ndarray
    prev_latent: np.ndarray

    def __post_init__(self) -> None:
        f = require_nchw(self.prev_frame, "prev_frame")
        l = require_nchw(self.prev_latent, "prev_latent")
        if f.shape[0] != 1 or f.shape[1] != 3:
            raise ShapeError(f"prev_frame must be (1, 3, h, w), got {f.shape}")
        if l.shape != (1, LATENT_CHANNELS, f.shape[2], f.shape[3]):
            raise ShapeError(
                f"prev_latent must be (1, {LATENT_CHANNELS}, {f.shape[2]}, {f.shape[3]}), got {l.shape}"
            )


def initial_state(first_frame: np.ndarray) -> StreamState:
    """Stream start: previous frame = first frame, latent = zeros."""
    f = require_nchw(first_frame, "first frame")
    return StreamState(prev_frame=f, prev_latent=zeros(1, LATENT_CHANNELS, f.shape[2], f.shape[3]))


# --------------------------------------------------------------------------
# Layer plan
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvLayer:
    name: str
    spec: ConvSpec
    where: str  # resolution domain of the layer's output


@dataclass(frozen=True)
class ActLayer:
    name: str
    channels: int
    where: str


@dataclass(frozen=True)
class SELayer:
    name: str
    spec: SESpec
    where: str


PlanEntry = ConvLayer | ActLayer | SELayer


def _cu_entries(prefix: str, config: NetworkConfig) -> list[PlanEntry]:
    d = config.d
    dw = lambda k: ConvSpec(d, d, (k, k), stride=1, groups=d)
    entries: list[PlanEntry] = []
    if config.cu_variant == "single":
        entries.append(ConvLayer(f"{prefix}.dw7", dw(7), HALF))
    else:
        entries.append(ConvLayer(f"{prefix}.dw3", dw(3), HALF))
        entries.append(ConvLayer(f"{prefix}.dw5", dw(5), HALF))
        entries.append(ConvLayer(f"{prefix}.dw7", dw(7), HALF))
    entries.append(ActLayer(f"{prefix}.act", d, HALF))
    if config.use_se:
        entries.append(SELayer(f"{prefix}.se", SESpec(d, SE_REDUCTION), HALF))
    entries.append(ConvLayer(f"{prefix}.pw", ConvSpec(d, d, (1, 1)), HALF))
    return entries


def _module_entries(name: str, in_channels: int, n_cu: int, config: NetworkConfig) -> list[PlanEntry]:
    d = config.d
    entries: list[PlanEntry] = [
        ConvLayer(f"{name}.enc1", ConvSpec(in_channels, d, (5, 5)), FULL),
        ActLayer(f"{name}.enc1.act", d, FULL),
        ConvLayer(f"{name}.enc2", ConvSpec(d, d, (5, 5), stride=2), HALF),
        ActLayer(f"{name}.enc2.act", d, HALF),
        ConvLayer(f"{name}.enc3", ConvSpec(d, d, (1, 1)), HALF),
        ActLayer(f"{name}.enc3.act", d, HALF),
    ]
    for i in range(n_cu):
        entries.extend(_cu_entries(f"{name}.cu{i}", config))
    entries.append(ConvLayer(f"{name}.dec", ConvSpec(2 * d, d, (1, 1)), FULL))
    entries.append(ActLayer(f"{name}.dec.act", d, FULL))
    return entries


def iter_plan(config: NetworkConfig) -> list[PlanEntry]:
    """Every layer of the network, in the canonical enumeration order."""
    d, s = config.d, config.upsample_factor
    n_a, n_d, n_f = config.depths
    plan: list[PlanEntry] = []
    plan.extend(_module_entries("alignment", config.alignment_in_channels, n_a, config))
    plan.append(ConvLayer("projection", ConvSpec(3, d, (3, 3)), FULL))
    plan.append(ActLayer("projection.act", d, FULL))
    plan.extend(_module_entries("differential", d, n_d, config))
    plan.extend(_module_entries("fusion", d, n_f, config))
    plan.append(ConvLayer("head.restore", ConvSpec(d // (s * s), 3, (3, 3)), UPSCALED))
    plan.append(ConvLayer("head.latent", ConvSpec(d, LATENT_CHANNELS, (1, 1)), FULL))
    return plan


def expected_entries(config: NetworkConfig) -> dict[str, tuple[int, int, int, int]]:
    """Ordered map of weight-store entry name -> required rank-4 shape."""
    out: dict[str, tuple[int, int, int, int]] = {}
    for layer in iter_plan(config):
        if isinstance(layer, ConvLayer):
            out[f"{layer.name}.weight"] = layer.spec.weight_shape
            out[f"{layer.name}.bias"] = (layer.spec.out_channels, 1, 1, 1)
        elif isinstance(layer, ActLayer):
            out[f"{layer.name}.slope"] = (layer.channels, 1, 1, 1)
        else:
            c, r = layer.spec.channels, layer.spec.reduction
            out[f"{layer.name}.w1"] = (c // r, c, 1, 1)
            out[f"{layer.name}.b1"] = (c // r, 1, 1, 1)
            out[f"{layer.name}.w2"] = (c, c // r, 1, 1)
            out[f"{layer.name}.b2"] = (c, 1, 1, 1)
    return out


# --------------------------------------------------------------------------
# Forward passes
# --------------------------------------------------------------------------

def _conv(x, weights, name: str, spec: ConvSpec, counter=None):
    w = weights[f"{name}.weight"].reshape(spec.weight_shape)
    b = weights[f"{name}.bias"].reshape(-1)
    return conv2d(x, spec, w, b, counter)


def _act(x, weights, name: str, counter=None):
    return prelu(x, weights[f"{name}.slope"].reshape(-1))


def _se(x, weights, name: str, spec: SESpec, counter=None):
    c, r = spec.channels, spec.reduction
    return se_apply(
        x,
        spec,
        weights[f"{name}.w1"].reshape(c // r, c),
        weights[f"{name}.w2"].reshape(c, c // r),
        weights[f"{name}.b1"].reshape(-1),
        weights[f"{name}.b2"].reshape(-1),
        counter,
    )


def cu_forward(
    x: np.ndarray,
    weights,
    config: NetworkConfig,
    prefix: str,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """One convolutional unit: depthwise stage, PReLU, optional SE, pointwise, residual.

    The multi-scale variant sums parallel 3/5/7 depthwise branches before the
    activation; the single variant uses one 7x7 depthwise layer.
    """
    d = config.d
    x = require_nchw(x, "cu input")
    if x.shape[1] != d:
        raise ShapeError(f"cu_forward: input has {x.shape[1]} channels, config.d = {d}")
    dw_spec = lambda k: ConvSpec(d, d, (k, k), stride=1, groups=d)
    if config.cu_variant == "single":
        y = _conv(x, weights, f"{prefix}.dw7", dw_spec(7), counter)
    else:
        y = _conv(x, weights, f"{prefix}.dw3", dw_spec(3), counter)
        y = y + _conv(x, weights, f"{prefix}.dw5", dw_spec(5), counter)
        y = y + _conv(x, weights, f"{prefix}.dw7", dw_spec(7), counter)
    y = _act(y, weights, f"{prefix}.act")
    if config.use_se:
        y = _se(y, weights, f"{prefix}.se", SESpec(d, SE_REDUCTION), counter)
    y = _conv(y, weights, f"{prefix}.pw", ConvSpec(d, d, (1, 1)), counter)
    return x + y


def _center_crop(x: np.ndarray, h: int, w: int) -> np.ndarray:
    dh, dw = x.shape[2] - h, x.shape[3] - w
    t, l = dh // 2, dw // 2
    return x[:, :, t : t + h, l : l + w]


def ed_module_forward(
    x: np.ndarray,
    weights,
    config: NetworkConfig,
    name: str,
    n_cu: int,
    counter: MacCounter | None = None,
) -> np.ndarray:
    """Shared encoder-decoder template for alignment/differential/fusion.

    Encoder: 5x5 conv, strided 5x5 conv, pointwise, then n_cu CUs at half
    resolution. Decoder: bilinear 2x upsample, center-crop to the skip's
    dims (odd input sizes), concat [upsampled; skip], fuse with a pointwise
    conv back to d channels at full resolution.
    """
    d = config.d
    skip = _act(_conv(x, weights, f"{name}.enc1", ConvSpec(x.shape[1], d, (5, 5)), counter),
                weights, f"{name}.enc1.act")
    y = _act(_conv(skip, weights, f"{name}.enc2", ConvSpec(d, d, (5, 5), stride=2), counter),
             weights, f"{name}.enc2.act")
    y = _act(_conv(y, weights, f"{name}.enc3", ConvSpec(d, d, (1, 1)), counter),
             weights, f"{name}.enc3.act")
    for i in range(n_cu):
        y = cu_forward(y, weights, config, f"{name}.cu{i}", counter)
    up = _center_crop(upsample2x(y), skip.shape[2], skip.shape[3])
    y = concat_channels(up, skip)
    return _act(_conv(y, weights, f"{name}.dec", ConvSpec(2 * d, d, (1, 1)), counter),
                weights, f"{name}.dec.act")


def evrnet_forward(
    cur: np.ndarray,
    state: StreamState,
    weights,
    config: NetworkConfig,
    counter: MacCounter | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One restoration step: (restored frame, next latent frame).

    Aligned features come from the concatenated (current, previous, latent)
    frames; the current frame is projected to d channels; the differential
    module refines (projected - aligned); the fusion module consumes
    (differential + projected) and feeds the two output heads.
    """
    cur = require_nchw(cur, "current frame")
    if cur.shape[0] != 1 or cur.shape[1] != 3:
        raise ShapeError(f"current frame must be (1, 3, h, w), got {cur.shape}")
    if cur.shape != state.prev_frame.shape:
        raise ShapeError(
            f"frame shape {cur.shape} does not match stream state {state.prev_frame.shape}"
        )
    if cur.shape[2] < 8 or cur.shape[3] < 8:
        raise ShapeError(f"frames must be at least 8x8, got {cur.shape[2]}x{cur.shape[3]}")
    d, s = config.d, config.upsample_factor
    n_a, n_d, n_f = config.depths

    stacked = concat_channels(concat_channels(cur, state.prev_frame), state.prev_latent)
    aligned = ed_module_forward(stacked, weights, config, "alignment", n_a, counter)
    projected = _act(_conv(cur, weights, "projection", ConvSpec(3, d, (3, 3)), counter),
                     weights, "projection.act")
    diff = ed_module_forward(elementwise_sub(projected, aligned), weights, config,
                             "differential", n_d, counter)
    fused = ed_module_forward(elementwise_add(diff, projected), weights, config,
                              "fusion", n_f, counter)
    shuffled = pixel_shuffle(fused, s) if s > 1 else fused
    restored = _conv(shuffled, weights, "head.restore", ConvSpec(d // (s * s), 3, (3, 3)), counter)
    latent = _conv(fused, weights, "head.latent", ConvSpec(d, LATENT_CHANNELS, (1, 1)), counter)
    return restored, latent


def restore_sequence(
    frames: list[np.ndarray],
    weights,
    config: NetworkConfig,
    counter: MacCounter | None = None,
) -> list[np.ndarray]:
    """Run the auto-regressive loop over a frame sequence.

    The stream starts with prev_frame = frame 0 and a zero latent; after every
    step the state takes the current input frame and the produced latent.
    """
    if len(frames) == 0:
        raise ValueError("restore_sequence: empty input sequence")
    state = initial_state(frames[0])
    shape = state.prev_frame.shape
    outputs: list[np.ndarray] = []
    for i, frame in enumerate(frames):
        frame = require_nchw(frame, f"frame {i}")
        if frame.shape != shape:
            raise ShapeError(f"frame {i}: shape {frame.shape} drifted from {shape}")
        restored, latent = evrnet_forward(frame, state, weights, config, counter)
        outputs.append(restored)
        state = StreamState(prev_frame=frame, prev_latent=latent)
    return outputs
