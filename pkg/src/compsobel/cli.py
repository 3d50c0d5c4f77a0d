"""edgecli: edge detection, oracle verification, resource reports and traces.

Exit codes: 0 ok, 1 I/O failure, 2 bad arguments or format, 3 invalid
image, 4 verification mismatch.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from typing import List, Optional

import numpy as np

from . import carrysave
from .datapath import (
    COLDIFF_BITS,
    COLSUM_BITS,
    DATA_BITS,
    StreamingPipeline,
    Variant,
    frame_events,
    process_frame,
)
from .golden import EdgeParams, ImageError, Norm, check_image, convolve2d, sobel_golden, sobel_kernels
from .pgm import PgmFormatError, read_pgm, write_pgm
from .resources import DesignParams, estimate_resources, render_kv, render_text

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_IMAGE = 3
EXIT_MISMATCH = 4

TRACE_LIMIT = 16
VARIANTS = [v.value for v in Variant]


def _params(args) -> EdgeParams:
    return EdgeParams(norm=Norm(args.norm), threshold=args.threshold)


def _threshold(text: str) -> int:
    value = int(text)
    if not 0 <= value <= 255:
        raise argparse.ArgumentTypeError("threshold must be in 0..255")
    return value


def _dimension(text: str) -> int:
    value = int(text)
    if value < 3:
        raise argparse.ArgumentTypeError("dimension must be at least 3")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _fault(text: str):
    stage, _, bit = text.partition(":")
    if stage not in ("p2pp", "ppn") or not bit.isdigit() or int(bit) >= DATA_BITS:
        raise argparse.ArgumentTypeError("expected p2pp:<bit> or ppn:<bit>")
    return stage, int(bit)


def cmd_detect(args) -> int:
    image = read_pgm(args.input)
    result = process_frame(image, Variant(args.variant), _params(args))
    write_pgm(args.output, result.pixels)
    if args.figure:
        from .plotting import plot_edges

        plot_edges(image, result.pixels, args.figure)
    return EXIT_OK


def _first_mismatch(expected: np.ndarray, actual: np.ndarray):
    diff = np.argwhere(expected != actual)
    if not len(diff):
        return None
    y, x = diff[0]
    return int(y), int(x), int(expected[y, x]), int(actual[y, x])


def cmd_verify(args, out=None) -> int:
    out = out or sys.stdout
    rng = np.random.default_rng(args.seed)
    params = EdgeParams()
    sx, sy = sobel_kernels()
    fault = (carrysave.inject_fault(*args.inject_fault) if args.inject_fault
             else contextlib.nullcontext())
    comparisons = 0
    with fault:
        for frame in range(args.frames):
            image = rng.integers(0, 256, size=(args.height, args.width))
            golden = {
                "gx": convolve2d(image, sx),
                "gy": convolve2d(image, sy),
                "magnitude": sobel_golden(image, params),
            }
            for variant in Variant:
                result = process_frame(image, variant, params)
                actual = {"gx": result.gx, "gy": result.gy, "magnitude": result.pixels}
                comparisons += 1
                for name in ("gx", "gy", "magnitude"):
                    hit = _first_mismatch(golden[name], actual[name])
                    if hit is not None:
                        y, x, want, got = hit
                        print(f"MISMATCH frame={frame} variant={variant.value} "
                              f"signal={name} y={y} x={x} expected={want} actual={got}",
                              file=out)
                        return EXIT_MISMATCH
    print(f"verified {args.frames} frame(s) of {args.width}x{args.height} "
          f"(seed {args.seed}): {comparisons} comparison(s), all bit-exact", file=out)
    return EXIT_OK


def cmd_report(args, out=None) -> int:
    out = out or sys.stdout
    variants = list(Variant) if args.all else [Variant(args.variant)]
    try:
        reports = [estimate_resources(DesignParams(args.width, args.height, args.bpp,
                                                   args.datapath_width, v))
                   for v in variants]
    except ValueError as exc:
        print(f"edgecli report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    reports.sort(key=lambda r: r.total_les)
    render = render_kv if args.format == "kv" else render_text
    out.write(render(reports))
    if args.figure:
        from .plotting import plot_resources

        plot_resources(reports, args.figure)
    return EXIT_OK


def _word(value, width: int) -> str:
    return f"0b{int(value):0{width}b}"


def render_trace(image, variant: Variant = Variant.LOOKAHEAD_COMPRESSOR,
                 params: EdgeParams = EdgeParams()) -> str:
    """Per-sample dump of window, side caches and datapath words."""
    img = check_image(image)
    lines: List[str] = [f"trace {img.shape[1]}x{img.shape[0]} variant={Variant(variant).value}"]

    def probe(cycle, cache, rec):
        row, col = cache.position
        w = rec["window"]
        lines.append(f"cycle {cycle:04d} y={row - 1} x={col - 1}")
        lines.append("  window " + " | ".join(
            " ".join(f"{v:3d}" for v in r) for r in w.rows()))
        side = rec["side"]
        if Variant(variant).cached:
            lines.append(f"  colsum {[_word(u, COLSUM_BITS) for u in side.colsum]}")
            lines.append(f"  coldiff {[_word(v, COLDIFF_BITS) for v in side.coldiff]}")
        for node in ("colsum.p2pp", "gx.p2pp", "gx.ppn", "gy.p2pp"):
            if node in rec:
                s, k = rec[node]
                lines.append(f"  {node} sum={_word(s, DATA_BITS)} carry={_word(k, DATA_BITS)}")
        for node in ("gx.word", "gy.word"):
            if node in rec:
                lines.append(f"  {node}={_word(rec[node], DATA_BITS)}")

    pipe = StreamingPipeline(img.shape[1], variant, params, probe=probe)
    for event in frame_events(img):
        sample = pipe.feed(event)
        if sample is not None:
            lines.append(f"  gx={sample.gx} gy={sample.gy} out={sample.value}")
    return "\n".join(lines) + "\n"


def cmd_trace(args, out=None) -> int:
    out = out or sys.stdout
    image = read_pgm(args.input)
    h, w = image.shape
    if h > TRACE_LIMIT or w > TRACE_LIMIT:
        print(f"edgecli trace: {w}x{h} exceeds the {TRACE_LIMIT}x{TRACE_LIMIT} limit",
              file=sys.stderr)
        return EXIT_USAGE
    out.write(render_trace(image, Variant(args.variant), _params(args)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgecli", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_edge_options(p):
        p.add_argument("--variant", choices=VARIANTS, default=Variant.LOOKAHEAD_COMPRESSOR.value)
        p.add_argument("--threshold", type=_threshold, default=None,
                       help="binarise output: 255 where magnitude >= T")
        p.add_argument("--norm", choices=[n.value for n in Norm], default=Norm.L2.value)

    p = sub.add_parser("detect", help="run edge detection on a binary PGM")
    p.add_argument("input")
    p.add_argument("output")
    add_edge_options(p)
    p.add_argument("--figure", help="also save an input/output figure (png, pdf, ...)")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("verify", help="check all variants against the convolution oracle")
    p.add_argument("--width", type=_dimension, default=64)
    p.add_argument("--height", type=_dimension, default=64)
    p.add_argument("--frames", type=_non_negative, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--inject-fault", type=_fault, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="modeled FPGA resources and critical path")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--variant", choices=VARIANTS, default=Variant.LOOKAHEAD_COMPRESSOR.value)
    group.add_argument("--all", action="store_true")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--bpp", type=int, default=8)
    p.add_argument("--datapath-width", type=int, default=DATA_BITS)
    p.add_argument("--format", choices=("text", "kv"), default="text")
    p.add_argument("--figure", help="save a resource/timing comparison figure")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("trace", help="per-cycle datapath dump for a tiny PGM")
    p.add_argument("input")
    add_edge_options(p)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PgmFormatError as exc:
        print(f"edgecli: malformed PGM: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ImageError as exc:
        print(f"edgecli: invalid image: {exc}", file=sys.stderr)
        return EXIT_IMAGE
    except OSError as exc:
        print(f"edgecli: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
