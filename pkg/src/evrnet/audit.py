"""Analytic parameter and multiply-accumulate accounting.

One MAC = one multiply-accumulate. Convolutions cost
out * (in/groups) * kh * kw per output element; a squeeze-excitation unit
costs its global pool (c*h*w) plus the two gate products (2*c^2/r). Bias
adds, PReLU, sigmoid, residual adds, interpolation, and pixel shuffle are
not counted. Parameters include conv biases, SE biases, and PReLU slopes.
MACs are quoted for a single frame at a caller-chosen resolution (the
reporting default is 640x360); parameter counts are resolution-independent.
"""
from __future__ import annotations

from dataclasses import dataclass

from .graph import FULL, HALF, UPSCALED, ConvLayer, NetworkConfig, PlanEntry, SELayer, iter_plan
from .layers import ConvSpec, SESpec, conv_out_hw


def conv_params(spec: ConvSpec) -> int:
    kh, kw = spec.kernel
    n = spec.out_channels * (spec.in_channels // spec.groups) * kh * kw
    return n + (spec.out_channels if spec.has_bias else 0)


def conv_macs(spec: ConvSpec, out_h: int, out_w: int) -> int:
    kh, kw = spec.kernel
    return spec.out_channels * (spec.in_channels // spec.groups) * kh * kw * out_h * out_w


def se_params(spec: SESpec) -> int:
    c, r = spec.channels, spec.reduction
    return 2 * (c * c) // r + c // r + c


def se_macs(spec: SESpec, h: int, w: int) -> int:
    c, r = spec.channels, spec.reduction
    return c * h * w + 2 * (c * c) // r


@dataclass(frozen=True)
class AuditRow:
    name: str
    params: int
    macs: int


@dataclass(frozen=True)
class AuditReport:
    height: int
    width: int
    rows: tuple[AuditRow, ...]
    module_params: dict[str, int]
    module_macs: dict[str, int]
    total_params: int
    total_macs: int


def _resolutions(config: NetworkConfig, h: int, w: int) -> dict[str, tuple[int, int]]:
    s = config.upsample_factor
    return {FULL: (h, w), HALF: conv_out_hw(h, w, 2), UPSCALED: (s * h, s * w)}


def _entry_counts(entry: PlanEntry, res: dict[str, tuple[int, int]]) -> tuple[int, int]:
    eh, ew = res[entry.where]
    if isinstance(entry, ConvLayer):
        return conv_params(entry.spec), conv_macs(entry.spec, eh, ew)
    if isinstance(entry, SELayer):
        return se_params(entry.spec), se_macs(entry.spec, eh, ew)
    return entry.channels, 0  # PReLU slopes


def count_params(config: NetworkConfig) -> int:
    """Total learnable parameters; independent of resolution and, for a fixed
    CU total, independent of how depth is split across the three modules."""
    res = _resolutions(config, 16, 16)
    return sum(_entry_counts(e, res)[0] for e in iter_plan(config))


def count_macs(config: NetworkConfig, h: int, w: int) -> int:
    """Analytic MACs for one frame at h x w (h, w >= 8)."""
    if h < 8 or w < 8:
        raise ValueError(f"count_macs: resolution must be at least 8x8, got {h}x{w}")
    res = _resolutions(config, h, w)
    return sum(_entry_counts(e, res)[1] for e in iter_plan(config))


def audit_report(config: NetworkConfig, h: int, w: int) -> AuditReport:
    res = _resolutions(config, h, w)
    rows = []
    module_params: dict[str, int] = {}
    module_macs: dict[str, int] = {}
    for entry in iter_plan(config):
        p, m = _entry_counts(entry, res)
        rows.append(AuditRow(entry.name, p, m))
        module = entry.name.split(".", 1)[0]
        module_params[module] = module_params.get(module, 0) + p
        module_macs[module] = module_macs.get(module, 0) + m
    return AuditReport(
        height=h,
        width=w,
        rows=tuple(rows),
        module_params=module_params,
        module_macs=module_macs,
        total_params=sum(r.params for r in rows),
        total_macs=sum(r.macs for r in rows),
    )


def _human(n: int) -> str:
    if n >= 1_000_000_000:
        return f"{n / 1e9:.2f} G"
    if n >= 1_000_000:
        return f"{n / 1e6:.2f} M"
    if n >= 1_000:
        return f"{n / 1e3:.2f} K"
    return str(n)


def render_table(report: AuditReport) -> str:
    name_w = max(len(r.name) for r in report.rows)
    lines = [
        f"Audit at {report.width}x{report.height} (MACs per frame)",
        f"{'layer':<{name_w}}  {'params':>12}  {'macs':>16}",
    ]
    lines.append("-" * len(lines[-1]))
    for r in report.rows:
        lines.append(f"{r.name:<{name_w}}  {r.params:>12}  {r.macs:>16}")
    lines.append("-" * len(lines[2]))
    for module in report.module_params:
        lines.append(
            f"{('module ' + module):<{name_w}}  {report.module_params[module]:>12}  "
            f"{report.module_macs[module]:>16}"
        )
    lines.append(
        f"{'network total':<{name_w}}  {report.total_params:>12}  {report.total_macs:>16}"
    )
    lines.append(
        f"network total: {_human(report.total_params)} params, {_human(report.total_macs)} MACs"
    )
    return "\n".join(lines)


def render_kv(report: AuditReport) -> str:
    """Machine-readable form: one key=value per line."""
    lines = [f"resolution.height={report.height}", f"resolution.width={report.width}"]
    for r in report.rows:
        lines.append(f"layer.{r.name}.params={r.params}")
        lines.append(f"layer.{r.name}.macs={r.macs}")
    for module in report.module_params:
        lines.append(f"module.{module}.params={report.module_params[module]}")
        lines.append(f"module.{module}.macs={report.module_macs[module]}")
    lines.append(f"total.params={report.total_params}")
    lines.append(f"total.macs={report.total_macs}")
    return "\n".join(lines)


def parse_kv(text: str) -> dict[str, int]:
    out: dict[str, int] = {}
    for line in text.strip().splitlines():
        key, _, value = line.partition("=")
        out[key.strip()] = int(value)
    return out
