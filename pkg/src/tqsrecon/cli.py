"""Command-line interface.

Exit codes: 0 success, 1 comparison or gate failure, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import WeightingConfig
from .config import ALGORITHMS, PRECISIONS, ReconstructionConfig
from .exceptions import ParameterError
from .grid import (generate_pattern, read_frame, read_pattern, simulate_measurement,
                   write_frame, write_pattern)
from .pgm import read_pgm, write_pgm
from .pipeline import bench, crop, format_psnr, pad_to_block_multiple, psnr, reconstruct
from .rljsde import KernelCache, kernel_memory_report, load_kernels, save_kernels

IMAGE_SUFFIXES = (".pgm", ".npy")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Reconstruction parameters plus I/O settings, loadable from a JSON file."""

    recon: ReconstructionConfig = field(default_factory=ReconstructionConfig)
    period: int = 32
    threads: int = -1
    report_format: str = "text"

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        raw = json.loads(Path(path).read_text())
        weighting = WeightingConfig(**raw.pop("weighting", {}))
        recon_keys = set(ReconstructionConfig.__dataclass_fields__) - {"weighting"}
        recon = {k: raw.pop(k) for k in list(raw) if k in recon_keys}
        run = {k: raw.pop(k) for k in ("period", "threads", "report_format") if k in raw}
        if raw:
            raise ParameterError(f"{path}: unknown config keys {sorted(raw)}")
        return cls(recon=ReconstructionConfig(weighting=weighting, **recon), **run)


def read_image(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".npy":
        img = np.load(path)
        if img.ndim != 2:
            raise ParameterError(f"{path}: expected a 2-D array")
        return np.asarray(img, dtype=np.float64)
    if path.suffix == ".pgm":
        return read_pgm(path)
    raise UsageError(f"unsupported image type {path.suffix!r}; use .pgm or .npy")


def write_image(path, image, bits=16) -> None:
    path = Path(path)
    if path.suffix == ".npy":
        np.save(path, np.asarray(image, dtype=np.float64))
    elif path.suffix == ".pgm":
        write_pgm(path, image, bits=bits)
    else:
        raise UsageError(f"unsupported image type {path.suffix!r}; use .pgm or .npy")


def emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for key, value in report.items():
            print(f"{key}: {value}")


def _parse_extent(text):
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}")


def _add_recon_flags(p):
    g = p.add_argument_group("reconstruction")
    g.add_argument("--config", type=Path, help="JSON run configuration; flags override it")
    g.add_argument("--window", type=int, help="model window W (default 32)")
    g.add_argument("--block", type=int, help="target block B (default 4)")
    g.add_argument("--iterations", type=int, help="iterations per block (default 200)")
    g.add_argument("--odc", type=float, help="step width in (0, 1] (default 0.5)")
    g.add_argument("--spatial-decay", type=float, help="spatial weight decay (default 0.8)")
    g.add_argument("--frequency-exponent", type=float,
                   help="frequency weight exponent (default 2)")
    g.add_argument("--precision", choices=PRECISIONS)
    g.add_argument("--no-clip", action="store_true", help="do not clip output to [0, 1]")
    g.add_argument("--format", dest="report_format", choices=("text", "json"))


def _run_config(args) -> RunConfig:
    run = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    c = run.recon
    weighting = WeightingConfig(
        args.spatial_decay if args.spatial_decay is not None else c.weighting.spatial_decay,
        args.frequency_exponent if args.frequency_exponent is not None
        else c.weighting.frequency_exponent)
    changes = {"weighting": weighting}
    for flag, key in (("window", "window"), ("block", "block"),
                      ("iterations", "n_iter"), ("odc", "odc"), ("precision", "precision")):
        if getattr(args, flag) is not None:
            changes[key] = getattr(args, flag)
    if args.no_clip:
        changes["clip"] = False
    if getattr(args, "algo", None):
        changes["algorithm"] = args.algo
    run.recon = c.replace(**changes)
    if args.report_format:
        run.report_format = args.report_format
    if getattr(args, "threads", None) is not None:
        run.threads = args.threads
    return run


# ------------------------------------------------------------------ commands

def cmd_pattern(args) -> int:
    pattern = generate_pattern(args.seed, args.period, args.block)
    write_pattern(pattern, args.output)
    print(f"wrote {args.output}: period={pattern.period} seed={pattern.seed} "
          f"tile={pattern.cells}x{pattern.cells}")
    return 0


def cmd_simulate(args) -> int:
    pattern = read_pattern(args.pattern)
    image = read_image(args.image)
    if args.pad:
        image, extent = pad_to_block_multiple(image, args.block)
    else:
        extent = image.shape
    if image.shape[0] % args.block or image.shape[1] % args.block:
        raise UsageError(f"image {image.shape} is not a multiple of block {args.block}; "
                         "drop --no-pad")
    frame = simulate_measurement(image, pattern)
    write_frame(frame, args.output)
    print(f"wrote {args.output}: {frame.shape[0]}x{frame.shape[1]} measurements "
          f"({frame.size}); reference extent {extent[0]}x{extent[1]}, "
          f"padded {image.shape[0]}x{image.shape[1]}")
    return 0


def cmd_reconstruct(args) -> int:
    run = _run_config(args)
    pattern = read_pattern(args.pattern)
    frame = read_frame(args.measurements)
    cache, loaded = None, False
    if run.recon.algorithm == "rljsde":
        if args.kernels and Path(args.kernels).exists():
            cache = load_kernels(args.kernels, pattern, run.recon.window,
                                 run.recon.weighting, run.recon.precision)
            loaded = True
        else:
            cache = KernelCache.from_config(pattern, run.recon)
    reference = read_image(args.reference) if args.reference else None
    report = reconstruct(frame, pattern, run.recon, n_jobs=run.threads, cache=cache)
    image = report.image
    if args.crop:
        image = crop(image, args.crop)
    elif reference is not None:
        image = crop(image, reference.shape)
    if reference is not None:
        report.psnr = psnr(reference, image)
    if args.kernels and cache is not None and not loaded:
        save_kernels(cache, args.kernels)
    write_image(args.output, image, bits=args.bits)
    summary = report.summary()
    summary["output"] = str(args.output)
    summary["output_shape"] = list(image.shape)
    emit(summary, run.report_format)
    return 0


def cmd_compare(args) -> int:
    a, b = read_image(args.image_a), read_image(args.image_b)
    if a.shape != b.shape:
        raise UsageError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    out = {"max_abs_diff": float(diff.max()), "mse": float(np.mean(diff ** 2)),
           "threshold": args.threshold}
    if args.reference:
        ref = read_image(args.reference)
        out["psnr_a_db"] = format_psnr(psnr(ref, crop(a, ref.shape)))
        out["psnr_b_db"] = format_psnr(psnr(ref, crop(b, ref.shape)))
    ok = out["max_abs_diff"] <= args.threshold
    out["result"] = "PASS" if ok else "FAIL"
    emit(out, args.report_format)
    return 0 if ok else 1


def _center_crop(image, size):
    if size is None:
        return image
    M, N = image.shape
    if M < size or N < size:
        raise UsageError(f"image {M}x{N} smaller than --size {size}")
    r, c = (M - size) // 2, (N - size) // 2
    return image[r:r + size, c:c + size]


def cmd_bench(args) -> int:
    run = _run_config(args)
    folder = Path(args.image_dir)
    if not folder.is_dir():
        raise UsageError(f"{folder} is not a directory")
    paths = sorted(p for p in folder.iterdir() if p.suffix in IMAGE_SUFFIXES)
    if args.max_images:
        paths = paths[:args.max_images]
    if not paths:
        raise UsageError(f"no .pgm or .npy images in {folder}")
    pattern = read_pattern(args.pattern) if args.pattern else \
        generate_pattern(args.seed, run.period, run.recon.block)
    images = [_center_crop(read_image(p), args.size) for p in paths]
    W = run.recon.window
    result = bench(images, pattern, run.recon, windows=(W // 2, W))
    print(result.format())
    print(f"published reference (1200x1200, one CPU core): L-JSDE 1823 s, RL-JSDE 86 s, 21.2x")
    if args.gate:
        ok = result.speedup >= args.gate
        print(f"speedup gate >= {args.gate:g}x: {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1
    return 0


def cmd_kernel_report(args) -> int:
    rep = kernel_memory_report(args.classes, args.precision, args.window)
    if args.report_format == "json":
        emit({"classes": rep.classes, "window": rep.window,
              "n_measurements": rep.n_measurements, "precision": rep.precision,
              "bytes": {"B": rep.bytes_B, "C": rep.bytes_C, "D": rep.bytes_D,
                        "total": rep.total},
              "megabytes": {k: round(v, 3) for k, v in rep.megabytes().items()}}, "json")
    else:
        print(rep.format())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tqsrecon",
        description="Three-quarter sampling simulation and L-JSDE / RL-JSDE reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="generate a periodic quadrant pattern (TQSP)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--period", type=int, default=32)
    p.add_argument("--block", type=int, default=4)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("simulate", help="simulate sensor measurements (TQSM) from an image")
    p.add_argument("image", type=Path)
    p.add_argument("--pattern", type=Path, required=True)
    p.add_argument("--block", type=int, default=4)
    p.add_argument("--no-pad", dest="pad", action="store_false",
                   help="reject images that are not a multiple of the block size")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct an image from measurements")
    p.add_argument("measurements", type=Path)
    p.add_argument("--pattern", type=Path, required=True)
    p.add_argument("--algo", choices=ALGORITHMS, default="rljsde")
    p.add_argument("-o", "--output", type=Path, required=True,
                   help=".pgm (quantized) or .npy (float64)")
    p.add_argument("--bits", type=int, choices=(8, 16), default=16)
    p.add_argument("--reference", type=Path, help="reference image for PSNR")
    p.add_argument("--crop", type=_parse_extent, help="crop output to ROWSxCOLS")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--kernels", type=Path,
                   help="TQSK kernel file; loaded if present, written otherwise")
    _add_recon_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("compare", help="difference statistics between two images")
    p.add_argument("image_a", type=Path)
    p.add_argument("image_b", type=Path)
    p.add_argument("--reference", type=Path)
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("--format", dest="report_format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time L-JSDE against RL-JSDE (single thread)")
    p.add_argument("image_dir", type=Path)
    p.add_argument("--pattern", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, help="center-crop images to SIZE x SIZE")
    p.add_argument("--max-images", type=int)
    p.add_argument("--gate", type=float, help="fail (exit 1) below this speedup")
    _add_recon_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("kernel-report", help="kernel memory for a number of offset classes")
    p.add_argument("--classes", type=int, default=64)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--precision", choices=PRECISIONS, default="single")
    p.add_argument("--format", dest="report_format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_kernel_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError, FileNotFoundError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
