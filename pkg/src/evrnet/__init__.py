"""Recurrent video restoration engine with degradation synthesis, quality
metrics, and parameter/MAC auditing."""

__version__ = "0.1.0"

from .audit import AuditReport, audit_report, count_macs, count_params
from .degrade import DegradeSpec, add_awgn, add_mixed, add_salt_pepper, block_compress
from .estimators import (
    BlockCompression,
    GaussianNoise,
    MixedNoise,
    SaltPepperNoise,
    VideoRestorer,
)
from .graph import NetworkConfig, StreamState, evrnet_forward, initial_state, restore_sequence
from .layers import ConvSpec, MacCounter, SESpec
from .metrics import MetricResult, evaluate, psnr, rgb_to_y, ssim
from .tensor import concat_channels, elementwise_add, elementwise_sub, load_tensor, save_tensor
from .validation import ShapeError
from .weights import WeightStore, init_random, load_weights, save_weights

__all__ = [
    "AuditReport", "audit_report", "count_macs", "count_params",
    "DegradeSpec", "add_awgn", "add_mixed", "add_salt_pepper", "block_compress",
    "BlockCompression", "GaussianNoise", "MixedNoise", "SaltPepperNoise", "VideoRestorer",
    "NetworkConfig", "StreamState", "evrnet_forward", "initial_state", "restore_sequence",
    "ConvSpec", "MacCounter", "SESpec",
    "MetricResult", "evaluate", "psnr", "rgb_to_y", "ssim",
    "concat_channels", "elementwise_add", "elementwise_sub", "load_tensor", "save_tensor",
    "ShapeError",
    "WeightStore", "init_random", "load_weights", "save_weights",
    "__version__",
]
