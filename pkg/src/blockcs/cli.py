"""Command-line front end for the codec and its experiments.

Commands: compress, reconstruct, eval, compare-baseline, fixed-sweep,
bench, synth. Exit codes: 0 success, 1 reconstruction failure (the message
names the offending block), 2 bad input or arguments.
"""

from __future__ import annotations

import argparse
import glob
import math
import os
import sys
import time

import numpy as np

from .decoder import DecodeError, DecoderConfig, reconstruct_image
from .encoder import FormatError, MeasurementStream, compress_image, load_pgm, save_pgm
from .fixedpoint import FixedFormat
from .reference import (
    RATE_TO_M,
    compare_baseline,
    psnr,
    ssim,
    sweep_fraction_bits,
    write_report,
)
from .synth import noise_image, write_corpus

SUPPORTED_M = (16, 32, 48)
FRAC_BITS = range(8, 13)
BENCH_PRESETS = {"1080p": (1920, 1080), "4k": (3840, 2160), "8k": (7680, 4320)}


def _resolve_m(args) -> int:
    m = args.measurements
    if args.rate is not None:
        if args.rate not in RATE_TO_M:
            raise ValueError(f"unsupported rate {args.rate}, pick one of {sorted(RATE_TO_M)}")
        m = RATE_TO_M[args.rate]
    if m not in SUPPORTED_M:
        raise ValueError(f"unsupported measurement count {m}, pick one of {SUPPORTED_M}")
    return m


def _config(args) -> DecoderConfig:
    frac = getattr(args, "frac_bits", 11)
    if frac not in FRAC_BITS:
        raise ValueError(f"unsupported fraction bits {frac}, pick one of 8..12")
    return DecoderConfig(fmt=FixedFormat(frac_bits=frac), threads=getattr(args, "threads", None))


def _load_corpus(directory: str) -> list[tuple[str, np.ndarray]]:
    paths = sorted(glob.glob(os.path.join(directory, "*.pgm")))
    if not paths:
        raise ValueError(f"empty corpus: no .pgm files in {directory}")
    return [(os.path.basename(p), load_pgm(p)) for p in paths]


def _fmt_psnr(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.2f}"


def cmd_compress(args) -> int:
    m = _resolve_m(args)
    img = load_pgm(args.input)
    stream = compress_image(img, m)
    with open(args.output, "wb") as fh:
        fh.write(stream.pack())
    print(f"blocks: {stream.num_blocks}")
    print(f"rate: {m / stream.n:g}")
    return 0


def cmd_reconstruct(args) -> int:
    with open(args.input, "rb") as fh:
        stream = MeasurementStream.unpack(fh.read())
    config = _config(args)
    start = time.perf_counter()
    img, report = reconstruct_image(stream, config)
    seconds = time.perf_counter() - start
    save_pgm(args.output, img)
    print(f"blocks: {report.blocks}")
    print(f"seconds: {seconds:.3f}")
    print(f"blocks/s: {report.blocks / seconds:.0f}")
    for name, value in report.counters.as_dict().items():
        print(f"{name}: {value}")
    return 0


def cmd_eval(args) -> int:
    ref = load_pgm(args.reference)
    test = load_pgm(args.test)
    print(f"PSNR: {_fmt_psnr(psnr(ref, test))}, SSIM: {ssim(ref, test):.3f}")
    return 0


def cmd_compare_baseline(args) -> int:
    corpus = _load_corpus(args.corpus)
    rows = compare_baseline(corpus, args.rate if args.rate is not None else 0.25,
                            args.seed, _config(args))
    print(f"baseline: gaussian+dct, blocked 8x8, k_max=m/2, prng=pcg64, seed={args.seed}")
    means = {}
    for row in rows:
        print(
            f"image={row['image']} rate={row['rate']:g} matrix={row['matrix']} "
            f"psnr={_fmt_psnr(row['psnr'])} ssim={row['ssim']:.3f}"
        )
        if row["image"] == "mean":
            means[row["matrix"]] = row["psnr"]
    print(f"gap: {means['structured'] - means['gaussian_dct']:.2f} dB")
    if args.report:
        write_report(args.report, rows)
    return 0


def cmd_fixed_sweep(args) -> int:
    corpus = _load_corpus(args.corpus)
    m = args.measurements
    if m not in SUPPORTED_M:
        raise ValueError(f"unsupported measurement count {m}, pick one of {SUPPORTED_M}")
    rows = sweep_fraction_bits(corpus, m=m, threads=args.threads)
    for row in rows:
        line = f"frac_bits: {row['frac_bits']}, psnr: {row['psnr']:.3f}"
        if row["increment"] is not None:
            line += f", increment: {row['increment']:.4f}"
        print(line)
    if args.report:
        write_report(args.report, rows)
    return 0


def cmd_bench(args) -> int:
    if args.width or args.height:
        if not (args.width and args.height):
            raise ValueError("bench needs both --width and --height")
        targets = [("custom", (args.width, args.height))]
    else:
        names = BENCH_PRESETS if args.preset == "all" else {args.preset: BENCH_PRESETS[args.preset]}
        targets = list(names.items())
    config = _config(args)
    m = _resolve_m(args)
    for name, (w, h) in targets:
        img = noise_image(w, h, args.seed)
        t0 = time.perf_counter()
        stream = compress_image(img, m)
        t1 = time.perf_counter()
        _, report = reconstruct_image(stream, config)
        t2 = time.perf_counter()
        print(
            f"preset: {name}, size: {w}x{h}, blocks: {report.blocks}, "
            f"compress_s: {t1 - t0:.3f}, reconstruct_s: {t2 - t1:.3f}, "
            f"blocks/s: {report.blocks / (t2 - t1):.0f}"
        )
    return 0


def cmd_synth(args) -> int:
    paths = write_corpus(args.out_dir, count=args.count, size=args.size, seed=args.seed)
    print(f"wrote {len(paths)} images to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockcs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_m(p):
        p.add_argument("--measurements", type=int, default=16,
                       help="measurements per block (16, 32 or 48)")
        p.add_argument("--rate", type=float, default=None,
                       help="sampling rate 0.25/0.5/0.75, overrides --measurements")

    p = sub.add_parser("compress", help="PGM image to measurement stream")
    p.add_argument("input")
    p.add_argument("output")
    add_m(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("reconstruct", help="measurement stream to PGM image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--frac-bits", type=int, default=11)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eval", help="PSNR/SSIM between two PGM images")
    p.add_argument("reference")
    p.add_argument("test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare-baseline", help="structured vs Gaussian+DCT on a corpus")
    p.add_argument("corpus")
    p.add_argument("--rate", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frac-bits", type=int, default=11)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--report", default=None, help="also write rows as CSV")
    p.set_defaults(func=cmd_compare_baseline)

    p = sub.add_parser("fixed-sweep", help="corpus PSNR across fraction bits 8..12")
    p.add_argument("corpus")
    p.add_argument("--measurements", type=int, default=16)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--report", default=None, help="also write rows as CSV")
    p.set_defaults(func=cmd_fixed_sweep)

    p = sub.add_parser("bench", help="compress+reconstruct throughput on synthetic noise")
    p.add_argument("--preset", choices=[*BENCH_PRESETS, "all"], default="all")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frac-bits", type=int, default=11)
    p.add_argument("--threads", type=int, default=None)
    add_m(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write a deterministic synthetic test corpus")
    p.add_argument("out_dir")
    p.add_argument("--count", type=int, default=12)
    p.add_argument("--size", type=int, default=192)
    p.add_argument("--seed", type=int, default=100)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    except DecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
