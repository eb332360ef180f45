"""Bit-exact weight serialization (EVRW files) and deterministic random init.

EVRW layout (all integers little-endian):
  magic "EVRW" | version u32 | d u32 | N_A u32 | N_D u32 | N_F u32 |
  cu_variant u8 (0=single, 1=multi) | use_se u8 | upsample u8 | reserved u8 |
  entry count u32 | entries...
Each entry: name length u16 | UTF-8 name | 4x u32 dims | float32 payload.
Entries appear in the canonical enumeration order of :func:`graph.iter_plan`,
so rewriting an unmodified store is byte-identical.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graph import NetworkConfig, expected_entries

EVRW_MAGIC = b"EVRW"
EVRW_VERSION = 1
_CU_CODE = {"single": 0, "multi": 1}
_CU_NAME = {v: k for k, v in _CU_CODE.items()}


@dataclass
class WeightStore:
    """Named float32 tensors for every learnable layer, plus the config they fit."""

    config: NetworkConfig
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def validate(self) -> None:
        """Check that entries exactly match the config's layer plan."""
        if not self.entries:
            raise ValueError("weight store has no entries")
        expected = expected_entries(self.config)
        missing = [n for n in expected if n not in self.entries]
        extra = [n for n in self.entries if n not in expected]
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing entries: {', '.join(missing[:8])}")
            if extra:
                parts.append(f"unexpected entries: {', '.join(extra[:8])}")
            raise ValueError("weight store does not match config: " + "; ".join(parts))
        bad = [
            f"{n} has shape {tuple(self.entries[n].shape)}, expected {shape}"
            for n, shape in expected.items()
            if tuple(self.entries[n].shape) != shape
        ]
        if bad:
            raise ValueError("weight store shape mismatch: " + "; ".join(bad[:8]))
        for n, arr in self.entries.items():
            if arr.dtype != np.float32:
                raise ValueError(f"entry {n}: dtype {arr.dtype}, expected float32")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"entry {n}: contains NaN or Inf")

    def equals(self, other: "WeightStore") -> bool:
        if self.config != other.config or list(self.entries) != list(other.entries):
            return False
        return all(np.array_equal(self.entries[n], other.entries[n]) for n in self.entries)


def _pack_config(config: NetworkConfig) -> bytes:
    n_a, n_d, n_f = config.depths
    return struct.pack(
        "<4I4B",
        config.d, n_a, n_d, n_f,
        _CU_CODE[config.cu_variant], int(config.use_se), config.upsample_factor, 0,
    )


def save_weights(store: WeightStore, path) -> None:
    """Serialize a validated store; deterministic, so re-saving is byte-identical."""
    if not store.entries:
        raise ValueError("save_weights: no entries")
    store.validate()
    chunks = [EVRW_MAGIC, struct.pack("<I", EVRW_VERSION), _pack_config(store.config),
              struct.pack("<I", len(store.entries))]
    for name, arr in store.entries.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<4I", *arr.shape))
        chunks.append(arr.astype("<f4", copy=False).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_weights(path, expected: NetworkConfig | None = None) -> WeightStore:
    """Read and fully validate an EVRW file.

    When *expected* is given the embedded config must equal it; any missing,
    extra, or mis-shaped entry is a hard error naming the entry.
    """
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != EVRW_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {EVRW_MAGIC!r}")
    off = 4

    def take(fmt: str):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(data):
            raise ValueError(f"{path}: truncated file at byte {off}")
        vals = struct.unpack_from(fmt, data, off)
        off += size
        return vals

    (version,) = take("<I")
    if version != EVRW_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    d, n_a, n_d, n_f, cu_code, use_se, ups, _reserved = take("<4I4B")
    if cu_code not in _CU_NAME:
        raise ValueError(f"{path}: unknown CU variant code {cu_code}")
    config = NetworkConfig(
        d=d, depths=(n_a, n_d, n_f), cu_variant=_CU_NAME[cu_code],
        use_se=bool(use_se), upsample_factor=ups,
    )
    if expected is not None and config != expected:
        raise ValueError(f"{path}: embedded config {config} does not match expected {expected}")

    (count,) = take("<I")
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = take("<H")
        if off + name_len > len(data):
            raise ValueError(f"{path}: truncated entry name at byte {off}")
        name = data[off : off + name_len].decode("utf-8")
        off += name_len
        dims = take("<4I")
        n_floats = int(np.prod(dims))
        end = off + 4 * n_floats
        if end > len(data):
            raise ValueError(f"{path}: truncated payload for entry {name!r}")
        entries[name] = np.frombuffer(data[off:end], dtype="<f4").reshape(dims).copy()
        off = end
    if off != len(data):
        raise ValueError(f"{path}: {len(data) - off} trailing bytes after last entry")

    store = WeightStore(config=config, entries=entries)
    store.validate()
    return store


def init_random(config: NetworkConfig, seed: int) -> WeightStore:
    """Deterministic seeded init: conv/SE weights uniform in +-sqrt(6/fan_in)
    (gain-preserving, so signals survive the deep recurrent path), PReLU
    slopes 0.25, biases zero."""
    rng = np.random.default_rng(seed)
    entries: dict[str, np.ndarray] = {}
    for name, shape in expected_entries(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("weight", "w1", "w2"):
            fan_in = int(np.prod(shape[1:]))
            bound = float(np.sqrt(6.0 / fan_in))
            entries[name] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
        elif leaf == "slope":
            entries[name] = np.full(shape, 0.25, dtype=np.float32)
        else:  # bias, b1, b2
            entries[name] = np.zeros(shape, dtype=np.float32)
    return WeightStore(config=config, entries=entries)
