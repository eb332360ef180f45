"""Command-line surface: restore | degrade | audit | metrics.

Frames are P6 PPM or raw .evrt tensor files, processed in sorted filename
order. Every command is deterministic given identical flags, files, and seed;
exit code 0 means no diagnostic was emitted.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .audit import audit_report, count_macs, render_kv, render_table
from .degrade import DegradeSpec, apply_spec
from .graph import NetworkConfig, initial_state, evrnet_forward, StreamState
from .metrics import evaluate
from .ppm import read_ppm, write_ppm
from .tensor import load_tensor, save_tensor
from .validation import ShapeError
from .weights import load_weights

FRAME_SUFFIXES = (".ppm", ".evrt")


def list_frames(directory: Path) -> list[Path]:
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not paths:
        raise FileNotFoundError(f"{directory}: no .ppm or .evrt frames found")
    return paths


def read_frame(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".evrt":
        return load_tensor(path)
    return read_ppm(path)


def write_frame(path: Path, frame: np.ndarray) -> None:
    if path.suffix.lower() == ".evrt":
        save_tensor(frame, path)
    else:
        write_ppm(path, frame)


def _config_from_args(args) -> NetworkConfig | None:
    fields = {}
    if args.d is not None:
        fields["d"] = args.d
    if args.depths is not None:
        fields["depths"] = tuple(args.depths)
    if args.cu_variant is not None:
        fields["cu_variant"] = args.cu_variant
    if args.se is not None:
        fields["use_se"] = args.se
    if args.scale is not None:
        fields["upsample_factor"] = args.scale
    if not fields:
        return None
    defaults = NetworkConfig()
    return NetworkConfig(
        d=fields.get("d", defaults.d),
        depths=fields.get("depths", defaults.depths),
        cu_variant=fields.get("cu_variant", defaults.cu_variant),
        use_se=fields.get("use_se", defaults.use_se),
        upsample_factor=fields.get("upsample_factor", defaults.upsample_factor),
    )


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, default=None, help="channel width")
    p.add_argument("--depths", type=int, nargs=3, metavar=("NA", "ND", "NF"), default=None,
                   help="CU counts for alignment/differential/fusion")
    p.add_argument("--cu-variant", choices=["single", "multi"], default=None)
    se = p.add_mutually_exclusive_group()
    se.add_argument("--se", dest="se", action="store_true", default=None)
    se.add_argument("--no-se", dest="se", action="store_false")
    p.add_argument("--scale", type=int, choices=[1, 2, 4], default=None,
                   help="super-resolution upsample factor")


def cmd_restore(args) -> int:
    requested = _config_from_args(args)
    store = load_weights(args.weights)
    if requested is not None and requested != store.config:
        raise ValueError(
            f"weight file config {store.config} conflicts with flags {requested}"
        )
    config = store.config
    in_dir, out_dir = Path(args.input_dir), Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = list_frames(in_dir)

    first = read_frame(paths[0])
    macs = count_macs(config, first.shape[2], first.shape[3])
    print(f"restoring {len(paths)} frames at {first.shape[3]}x{first.shape[2]} "
          f"({macs} MACs/frame)")

    state: StreamState | None = None
    shape = None
    for i, path in enumerate(paths):
        frame = read_frame(path) if i else first
        if i == 0:
            state = initial_state(frame)
            shape = frame.shape
        elif frame.shape != shape:
            raise ShapeError(f"frame {i} ({path.name}): shape {frame.shape} drifted from {shape}")
        t0 = time.perf_counter()
        restored, latent = evrnet_forward(frame, state, store, config)
        dt = time.perf_counter() - t0
        state = StreamState(prev_frame=frame, prev_latent=latent)
        out_path = out_dir / path.name
        write_frame(out_path, restored)
        print(f"frame {i}: {path.name} -> {out_path.name}  {dt * 1e3:.1f} ms")
    return 0


def cmd_degrade(args) -> int:
    if args.mixed and (args.awgn is None or args.snp is None):
        raise ValueError("--mixed requires both --awgn and --snp")
    spec = DegradeSpec(
        awgn_var=args.awgn if args.awgn is not None else 0.0,
        snp_density=args.snp if args.snp is not None else 0.0,
        quality=args.quality,
        seed=args.seed,
    )
    in_dir, out_dir = Path(args.input_dir), Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, path in enumerate(list_frames(in_dir)):
        frame = read_frame(path)
        write_frame(out_dir / path.name, apply_spec(frame, spec, frame_offset=i))
    manifest = out_dir / "manifest.txt"
    manifest.write_text(
        f"tool_version={__version__}\n"
        f"seed={spec.seed}\n"
        f"awgn_var={spec.awgn_var!r}\n"
        f"snp_density={spec.snp_density!r}\n"
        f"quality={'' if spec.quality is None else spec.quality}\n"
    )
    print(f"degraded frames written to {out_dir} (manifest: {manifest.name})")
    return 0


def cmd_audit(args) -> int:
    config = _config_from_args(args) or NetworkConfig()
    report = audit_report(config, args.height, args.width)
    print(render_kv(report) if args.format == "kv" else render_table(report))
    return 0


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.6f}"


def cmd_metrics(args) -> int:
    ref_paths = list_frames(Path(args.ref_dir))
    test_paths = list_frames(Path(args.test_dir))
    if len(ref_paths) != len(test_paths):
        raise ValueError(
            f"frame count mismatch: {len(ref_paths)} reference vs {len(test_paths)} test"
        )
    spaces = ["rgb", "y"] if args.space == "both" else [args.space]
    cols = [f"{m}_{s}" for s in spaces for m in ("psnr", "ssim")]
    print("frame  " + "  ".join(f"{c:>12}" for c in cols))
    sums = {c: 0.0 for c in cols}
    count = 0
    for ref_path, test_path in zip(ref_paths, test_paths):
        ref, test = read_frame(ref_path), read_frame(test_path)
        if ref.shape != test.shape:
            raise ShapeError(
                f"{ref_path.name} vs {test_path.name}: shape {ref.shape} != {test.shape}"
            )
        r = evaluate(ref, test)
        values = {"psnr_rgb": r.psnr_rgb, "ssim_rgb": r.ssim_rgb,
                  "psnr_y": r.psnr_y, "ssim_y": r.ssim_y}
        for c in cols:
            sums[c] += values[c]
        count += 1
        print(f"{ref_path.name:<6} " + "  ".join(f"{_fmt(values[c]):>12}" for c in cols))
    print("mean   " + "  ".join(f"{_fmt(sums[c] / count):>12}" for c in cols))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evrnet", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restore", help="run the restoration engine over a frame sequence")
    p.add_argument("--weights", required=True, help="EVRW weight file")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--output-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("degrade", help="synthesize degradations over a frame sequence")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--awgn", type=float, default=None, metavar="VAR", help="Gaussian noise variance")
    p.add_argument("--snp", type=float, default=None, metavar="RHO", help="salt-and-pepper density")
    p.add_argument("--mixed", action="store_true", help="require AWGN + S&P together")
    p.add_argument("--quality", type=int, default=None, metavar="Q", help="block-compression quality 1..100")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("audit", help="print per-layer parameter and MAC counts")
    _add_config_flags(p)
    p.add_argument("--height", type=int, default=360)
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--format", choices=["table", "kv"], default="table")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("metrics", help="PSNR/SSIM between two frame directories")
    p.add_argument("--ref-dir", required=True)
    p.add_argument("--test-dir", required=True)
    p.add_argument("--space", choices=["rgb", "y", "both"], default="both")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, ShapeError) as exc:
        print(f"evrnet {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
