"""
Command-line entry point.

    crackwidth measure --mask m.png --point 50,50
    crackwidth batch   --mask m.png --points pts.csv --jobs 4
    crackwidth eval    --mask m.png --points ann.csv      (or --corpus default)
    crackwidth synth   --kind strip --width 5 --angle 0 --out fixture
    crackwidth overlay --mask m.png --points pts.csv --out overlay.png

Exit status: 0 on success, 1 when any point failed (the failures are part of
the output), 2 for an invalid invocation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .cascade import GATE_MODES, CascadeConfig, Measurement, PointFailure, measure_batch
from .evaluation import CORPORA, build_corpus, evaluate, read_points_csv, render_overlay, write_annotations
from .maskio import CheckPoint, MIN_PATCH_SIZE, load_mask, save_mask
from .ransac import RansacParams
from .synth import KINDS, SAMPLINGS, SyntheticSpec, synth_crack
from .tilt import TiltConfig

log = logging.getLogger("crackwidth")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


# argparse ``type=`` callables: raising ArgumentTypeError turns into exit 2
def _ranged(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}")
        if isinstance(v, float) and not math.isfinite(v):
            raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"must be {'>' if lo_open else '>='} {lo}: {text!r}")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise argparse.ArgumentTypeError(f"must be {'<' if hi_open else '<='} {hi}: {text!r}")
        return v

    return parse


def _point(text) -> CheckPoint:
    try:
        x, y = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y integers, got {text!r}")
    if x < 0 or y < 0:
        raise argparse.ArgumentTypeError(f"coordinates must be >= 0: {text!r}")
    return CheckPoint(x, y)


def _pair(text) -> Tuple[int, int]:
    try:
        a, b = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected w,h integers, got {text!r}")
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError(f"canvas sides must be >= 1: {text!r}")
    return a, b


def parse_angle_grid(text) -> Tuple[float, ...]:
    """``start:step:stop`` (inclusive, degrees) or a comma list."""
    try:
        if ":" in text:
            start, step, stop = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            grid = tuple(start + k * step for k in range(n))
        else:
            grid = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:step:stop or a comma list, got {text!r}")
    if not grid or not all(math.isfinite(g) for g in grid):
        raise argparse.ArgumentTypeError(f"empty or non-finite angle grid: {text!r}")
    return grid


def _add_cascade_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("cascade")
    g.add_argument("--patch-size", type=_ranged(int, MIN_PATCH_SIZE), default=64)
    g.add_argument("--gamma-deg", type=_ranged(float, 0, 90, True, True), default=10.0)
    g.add_argument("--gate-mode", choices=GATE_MODES, default="angle")
    g.add_argument("--lambda", dest="lam", type=_ranged(float, 0, lo_open=True), default=None,
                   help="sparse weight (default 1/sqrt(max(H, W)))")
    g.add_argument("--angle-grid", type=parse_angle_grid, default=parse_angle_grid("0:5:90"))
    g.add_argument("--max-outer", type=_ranged(int, 1), default=50)
    g.add_argument("--max-inner", type=_ranged(int, 1), default=500)
    g.add_argument("--tol", type=_ranged(float, 0, lo_open=True), default=1e-6, help="inner solver tolerance")
    g.add_argument("--seed", type=_ranged(int, 0), default=0, help="RANSAC seed")
    g.add_argument("--jobs", type=_ranged(int, 1), default=1)
    g.add_argument("--debug-dump", metavar="DIR", default=None,
                   help="write low-rank/sparse iterates of each solver run as PNGs")
    g.add_argument("--scale-mm-per-px", type=_ranged(float, 0, lo_open=True), default=None)
    g.add_argument("--timings", action="store_true", help="include elapsed times in the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crackwidth", description="Crack width at check points of a binary mask.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="width at one check point")
    p.add_argument("--mask", required=True)
    p.add_argument("--point", required=True, type=_point, help="x,y")
    p.add_argument("--out", default=None)
    _add_cascade_flags(p)

    p = sub.add_parser("batch", help="widths at the points of a CSV (JSON lines)")
    p.add_argument("--mask", required=True)
    p.add_argument("--points", required=True, help="CSV with x,y columns")
    p.add_argument("--out", default=None)
    _add_cascade_flags(p)

    p = sub.add_parser("eval", help="MAE/MSE and routing counts against ground truth")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mask")
    src.add_argument("--corpus", choices=sorted(CORPORA))
    p.add_argument("--points", help="annotation CSV x,y,gt_width_px (with --mask)")
    p.add_argument("--out", default=None)
    _add_cascade_flags(p)

    p = sub.add_parser("synth", help="write a synthetic mask PNG and its annotation CSV")
    p.add_argument("--kind", choices=KINDS, default="strip")
    p.add_argument("--width", type=_ranged(float, 1), default=5.0)
    p.add_argument("--width2", type=_ranged(float, 1), default=None, help="second arm width (cross)")
    p.add_argument("--angle", type=_ranged(float), default=0.0)
    p.add_argument("--jitter", type=_ranged(float, 0), default=0.0)
    p.add_argument("--canvas", type=_pair, default=(160, 160), help="w,h")
    p.add_argument("--n-points", type=_ranged(int, 0), default=13)
    p.add_argument("--sampling", choices=SAMPLINGS, default="uniform")
    p.add_argument("--seed", type=_ranged(int, 0), default=0)
    p.add_argument("--out", required=True, help="output stem; writes STEM.png and STEM.csv")

    p = sub.add_parser("overlay", help="render measurements over the mask")
    p.add_argument("--mask", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--point", type=_point)
    src.add_argument("--points")
    p.add_argument("--out", required=True)
    _add_cascade_flags(p)
    return parser


def config_from_args(args) -> CascadeConfig:
    tilt = TiltConfig(
        lam=args.lam,
        inner_tol=args.tol,
        inner_max_iters=args.max_inner,
        outer_max_iters=args.max_outer,
        angle_grid=args.angle_grid,
    )
    return CascadeConfig(
        gamma_deg=args.gamma_deg,
        gate_mode=args.gate_mode,
        patch_size=args.patch_size,
        ransac=RansacParams(seed=args.seed),
        tilt=tilt,
        debug_dir=args.debug_dump,
    )


def _dumps(obj) -> str:
    return json.dumps(obj, allow_nan=True)


def _emit(lines: Sequence[str], out: Optional[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _result_dict(res, args) -> dict:
    if isinstance(res, PointFailure):
        return res.to_dict()
    return res.to_dict(timings=args.timings, scale_mm_per_px=args.scale_mm_per_px)


def _load_points(path) -> List[CheckPoint]:
    return [cp for cp, _ in read_points_csv(path)]


def _cmd_measure(args, parser) -> int:
    mask = load_mask(args.mask)
    cfg = config_from_args(args)
    (res,) = measure_batch(mask, [args.point], cfg)
    _emit([_dumps(_result_dict(res, args))], args.out)
    return EXIT_PARTIAL if isinstance(res, PointFailure) else EXIT_OK


def _cmd_batch(args, parser) -> int:
    mask = load_mask(args.mask)
    cps = _load_points(args.points)
    cfg = config_from_args(args)
    results = measure_batch(mask, cps, cfg, jobs=args.jobs)
    _emit([_dumps(_result_dict(r, args)) for r in results], args.out)
    return EXIT_PARTIAL if any(isinstance(r, PointFailure) for r in results) else EXIT_OK


def _cmd_eval(args, parser) -> int:
    cfg = config_from_args(args)
    if args.mask:
        if not args.points:
            parser.error("eval --mask needs --points with a gt_width_px column")
        rows = read_points_csv(args.points)
        if any(gt is None for _, gt in rows):
            raise ValueError(f"{args.points}: every row needs gt_width_px")
        corpus = [(load_mask(args.mask), rows)]
    else:
        corpus = build_corpus(CORPORA[args.corpus]())
    report = evaluate(corpus, cfg, jobs=args.jobs)
    _emit([_dumps(report.to_dict(timings=args.timings, scale_mm_per_px=args.scale_mm_per_px))], args.out)
    return EXIT_PARTIAL if report.errors else EXIT_OK


def _cmd_synth(args, parser) -> int:
    spec = SyntheticSpec(
        kind=args.kind,
        width_px=args.width,
        angle_deg=args.angle,
        jitter_px=args.jitter,
        canvas=args.canvas,
        seed=args.seed,
        n_points=args.n_points,
        width2_px=args.width2,
        sampling=args.sampling,
    )
    mask, truths = synth_crack(spec)
    stem = Path(args.out)
    if stem.suffix.lower() in (".png", ".csv"):
        stem = stem.with_suffix("")
    save_mask(mask, stem.with_suffix(".png"))
    write_annotations(stem.with_suffix(".csv"), truths)
    return EXIT_OK


def _cmd_overlay(args, parser) -> int:
    mask = load_mask(args.mask)
    cps = [args.point] if args.point else _load_points(args.points)
    results = measure_batch(mask, cps, config_from_args(args), jobs=args.jobs)
    good = [r for r in results if isinstance(r, Measurement)]
    render_overlay(mask, good, args.out)
    failures = [r for r in results if isinstance(r, PointFailure)]
    if failures:
        _emit([_dumps(f.to_dict()) for f in failures], None)
        return EXIT_PARTIAL
    return EXIT_OK


COMMANDS = {
    "measure": _cmd_measure,
    "batch": _cmd_batch,
    "eval": _cmd_eval,
    "synth": _cmd_synth,
    "overlay": _cmd_overlay,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, parser)
    except (ValueError, OSError) as exc:
        # bad input files or shapes: reported like a usage error
        print(f"crackwidth {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
