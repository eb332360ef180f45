"""Scikit-learn-style estimator surface.

All estimators follow the fit/transform convention with parameters stored
verbatim in ``__init__`` (so ``get_params``/``set_params``/``clone`` work and
they compose inside sklearn pipelines). X is a frame stack: an array or list
of frames shaped (t, 3, h, w) with values in [0, 1].
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import degrade
from .graph import NetworkConfig, restore_sequence
from .validation import ShapeError
from .weights import WeightStore, init_random, load_weights


def _as_frame_list(X) -> list[np.ndarray]:
    frames = [np.asarray(f, dtype=np.float32) for f in X]
    if not frames:
        raise ValueError("empty frame stack")
    out = []
    for i, f in enumerate(frames):
        if f.ndim == 3:
            f = f[None]
        if f.ndim != 4 or f.shape[0] != 1:
            raise ShapeError(f"frame {i}: expected (3, h, w) or (1, 3, h, w), got {f.shape}")
        out.append(f)
    return out


class VideoRestorer(BaseEstimator):
    """Recurrent video restorer.

    Provide ``weights`` (an EVRW path or a WeightStore) to run a trained
    network; its embedded config is used, and any explicitly set architecture
    parameter that disagrees with it is an error rather than a silent
    override. With ``weights=None`` the architecture parameters (or their
    defaults) are used with deterministic random init from ``seed``.
    """

    def __init__(self, weights=None, d=None, depths=None, cu_variant=None,
                 use_se=None, upsample_factor=None, seed=0):
        self.weights = weights
        self.d = d
        self.depths = depths
        self.cu_variant = cu_variant
        self.use_se = use_se
        self.upsample_factor = upsample_factor
        self.seed = seed

    def _requested_config(self) -> NetworkConfig | None:
        overrides = {
            "d": self.d,
            "depths": self.depths,
            "cu_variant": self.cu_variant,
            "use_se": self.use_se,
            "upsample_factor": self.upsample_factor,
        }
        set_fields = {k: v for k, v in overrides.items() if v is not None}
        if not set_fields:
            return None
        defaults = NetworkConfig()
        return NetworkConfig(**{f: set_fields.get(f, getattr(defaults, f))
                                for f in overrides})

    def fit(self, X=None, y=None):
        """Materialize weights; no data is consumed."""
        requested = self._requested_config()
        if self.weights is None:
            config = requested if requested is not None else NetworkConfig()
            self.store_ = init_random(config, self.seed)
        else:
            store = self.weights if isinstance(self.weights, WeightStore) \
                else load_weights(self.weights)
            store.validate()
            if requested is not None and requested != store.config:
                raise ValueError(
                    f"weight file config {store.config} conflicts with requested {requested}"
                )
            self.store_ = store
        self.config_ = self.store_.config
        return self

    def transform(self, X) -> np.ndarray:
        """Restore a frame stack; returns (t, 3, s*h, s*w)."""
        if not hasattr(self, "store_"):
            self.fit()
        outputs = restore_sequence(_as_frame_list(X), self.store_, self.config_)
        return np.concatenate(outputs, axis=0)

    def predict(self, X) -> np.ndarray:
        return self.transform(X)


class _FrameTransformer(TransformerMixin, BaseEstimator):
    """Base for stateless per-frame degradations."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        frames = _as_frame_list(X)
        out = [self._apply(f, i) for i, f in enumerate(frames)]
        return np.concatenate(out, axis=0)

    def _apply(self, frame: np.ndarray, index: int) -> np.ndarray:
        raise NotImplementedError


class GaussianNoise(_FrameTransformer):
    """Seeded additive white Gaussian noise with the given variance."""

    def __init__(self, variance=0.01, seed=0):
        self.variance = variance
        self.seed = seed

    def _apply(self, frame, index):
        return degrade.add_awgn(frame, self.variance, self.seed, frame_offset=index)


class SaltPepperNoise(_FrameTransformer):
    """Seeded impulse noise replacing the given fraction of pixels."""

    def __init__(self, density=0.1, seed=0):
        self.density = density
        self.seed = seed

    def _apply(self, frame, index):
        return degrade.add_salt_pepper(frame, self.density, self.seed, frame_offset=index)


class MixedNoise(_FrameTransformer):
    """AWGN followed by salt-and-pepper, sharing one seed."""

    def __init__(self, variance=0.001, density=0.1, seed=0):
        self.variance = variance
        self.density = density
        self.seed = seed

    def _apply(self, frame, index):
        return degrade.add_mixed(frame, self.variance, self.density, self.seed, frame_offset=index)


class BlockCompression(_FrameTransformer):
    """8x8 block-DCT quantization proxy; lower quality = stronger artifacts."""

    def __init__(self, quality=40):
        self.quality = quality

    def _apply(self, frame, index):
        return degrade.block_compress(frame, self.quality)
