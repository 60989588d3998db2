"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 usage or input error,
3 empty benchmark corpus.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import benchmark as bench
from .core import CoordinateFrame, Fallback, GmmInterpError, InterpConfig
from .engine import forward
from .imaging import (
    list_images,
    load_image,
    load_points,
    random_subsample,
    save_image,
    save_points,
    synthetic_blob_image,
    write_table,
)
from .optimize import OptimConfig, displacement_report, gradient_spot_check, optimize_points
from .resample import Filter, resample
from .validation import run_case

log = logging.getLogger("gmminterp")

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"factors must be positive integers, got {text}")
    return vals


def _load_image_or_fail(path):
    if not os.path.exists(path):
        raise UsageError(f"no such file: {path}")
    return load_image(path)


def cmd_forward(args) -> int:
    if not os.path.exists(args.points):
        raise UsageError(f"no such file: {args.points}")
    ps = load_points(args.points)
    cfg = InterpConfig(args.sigma, args.radius, Fallback(args.fallback))
    img, cache = forward(ps, cfg, CoordinateFrame(args.width, args.height), workers=args.workers)
    save_image(img, args.out)
    print(f"fallback pixels: {cache.num_fallback}", file=sys.stderr)
    return EXIT_OK


def cmd_resample(args) -> int:
    img = _load_image_or_fail(args.input)
    save_image(resample(img, CoordinateFrame(args.width, args.height), args.method), args.out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if not os.path.isdir(args.images):
        raise UsageError(f"no such directory: {args.images}")
    methods = list(bench.ALL_METHODS) if args.methods == "all" else [m.strip() for m in args.methods.split(",")]
    unknown = [m for m in methods if m not in bench.ALL_METHODS]
    if unknown:
        raise UsageError(f"unknown method(s): {', '.join(unknown)}")
    sigma = args.sigma if args.sigma == "auto" else _positive_float(args.sigma)
    rows = []
    for path in list_images(args.images):
        try:
            img = load_image(path)
        except (GmmInterpError, OSError) as e:
            log.warning("skipping %s: %s", path, e)
            continue
        rows += bench.benchmark_image(path.stem, img, args.factors, methods, sigma,
                                      downsample_with=args.downsample, workers=args.workers)
    if not rows:
        print(f"error: no readable images in {args.images}", file=sys.stderr)
        return EXIT_EMPTY
    bench.write_report(args.out, rows, timing=not args.no_timing)
    for (factor, method), mean in bench.aggregate(rows).items():
        print(f"factor={factor:<3d} {method:<9s} mean_l1={mean:.6f}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    img = _load_image_or_fail(args.image)
    ps = random_subsample(img, args.num_points, args.seed)
    icfg = InterpConfig(args.sigma, args.radius)
    ocfg = OptimConfig(steps=args.steps, learning_rate=args.lr, optimize_colors=args.optimize_colors,
                       log_every=args.log_every, seed=args.seed)
    if args.spot_check:
        check = gradient_spot_check(ps, img, args.sigma, seed=args.seed)
        print(f"step-0 gradient spot-check: {'pass' if check['ok'] else 'FAIL'} "
              f"(max abs err {check['max_abs_err']:.3e})")
        if not check["ok"]:
            return EXIT_FAILED
    res = optimize_points(ps, img, icfg, ocfg, workers=args.workers)
    write_table(args.log, res.log.HEADER, res.log.rows)
    write_table(args.loss_out, ("step", "loss"), list(enumerate(res.losses)))
    if args.final:
        save_image(forward(res.points, icfg, CoordinateFrame(img.shape[1], img.shape[0]))[0], args.final)
    if args.points_out:
        save_points(res.points, args.points_out)
    rep = displacement_report(res.log)
    print(f"loss: initial={res.losses[0]:.6f} final={res.losses[-1]:.6f}")
    print(f"displacement: mean={rep.mean:.6f} max={rep.max:.6f}")
    if args.report:
        write_table(args.report, ("point_index", "x0", "y0", "x1", "y1"),
                    [(i, *map(float, s), *map(float, e)) for i, (s, e) in enumerate(zip(rep.start, rep.end))])
    return EXIT_OK


def cmd_validate(args) -> int:
    fault = 1e-3 if args.corrupt else 0.0
    failed = []
    print(f"{'seed':>6} {'fwd_rel':>10} {'unity':>10} {'const':>10} {'grad':>8} {'det':>4} {'trunc_abs':>10}")
    for k in range(args.cases):
        seed = args.seed + k
        r = run_case(seed, grid_max=args.grid_max, points_max=args.points_max, fault=fault)
        print(f"{seed:>6} {r.forward_rel:10.2e} {r.unity:10.2e} {r.constant:10.2e} "
              f"{r.gradient_scaled:8.3f} {'ok' if r.deterministic else 'NO':>4} {r.truncation_abs:10.2e}")
        failed += [(seed, name) for name in r.failures()]
    if failed:
        for seed, name in failed:
            print(f"FAILED {name} (replay with --seed {seed} --cases 1)", file=sys.stderr)
        return EXIT_FAILED
    print(f"all hard checks passed on {args.cases} case(s)")
    return EXIT_OK


def cmd_make_corpus(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for k in range(args.count):
        img = synthetic_blob_image(args.size, args.size, args.seed + k)
        save_image(img, os.path.join(args.out, f"blob_{k:03d}.ppm"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmminterp", description="Gaussian-mixture scattered-point image interpolation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="render a point file to an image")
    f.add_argument("--points", required=True)
    f.add_argument("--width", type=_positive_int, required=True)
    f.add_argument("--height", type=_positive_int, required=True)
    f.add_argument("--sigma", type=_positive_float, required=True)
    f.add_argument("--radius", type=_positive_float, default=None, help="cutoff in pixels (default 3*sigma)")
    f.add_argument("--fallback", choices=[x.value for x in Fallback], default="nearest")
    f.add_argument("--workers", type=_positive_int, default=1)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_forward)

    b = sub.add_parser("benchmark", help="downsample/upsample L1 benchmark over a directory")
    b.add_argument("--images", required=True)
    b.add_argument("--factors", type=_int_list, default=[2, 4, 8, 16])
    b.add_argument("--methods", default="all")
    b.add_argument("--sigma", default="auto")
    b.add_argument("--downsample", choices=["box", "bicubic"], default="box")
    b.add_argument("--workers", type=_positive_int, default=1)
    b.add_argument("--no-timing", action="store_true", help="write 0 for wall_time_ms (byte-stable reports)")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)

    o = sub.add_parser("optimize", help="optimize random point positions against an image")
    o.add_argument("--image", required=True)
    o.add_argument("--num-points", type=_positive_int, required=True)
    o.add_argument("--steps", type=_positive_int, required=True)
    o.add_argument("--lr", type=float, required=True)
    o.add_argument("--sigma", type=_positive_float, required=True)
    o.add_argument("--radius", type=_positive_float, default=None)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--log-every", type=_positive_int, default=10)
    o.add_argument("--optimize-colors", action="store_true")
    o.add_argument("--workers", type=_positive_int, default=1)
    o.add_argument("--spot-check", action=argparse.BooleanOptionalAction, default=True)
    o.add_argument("--log", required=True, help="trajectory table")
    o.add_argument("--loss-out", required=True, help="loss curve table")
    o.add_argument("--final", help="final reconstruction image")
    o.add_argument("--points-out", help="final point file")
    o.add_argument("--report", help="per-point start/end table")
    o.set_defaults(func=cmd_optimize)

    v = sub.add_parser("validate", help="randomized engine-vs-reference checks")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--cases", type=int, default=100)
    v.add_argument("--grid-max", type=_positive_int, default=8)
    v.add_argument("--points-max", type=_positive_int, default=20)
    v.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("resample", help="resize an image with a classical filter")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--width", type=_positive_int, required=True)
    r.add_argument("--height", type=_positive_int, required=True)
    r.add_argument("--method", choices=[x.value for x in Filter], required=True)
    r.set_defaults(func=cmd_resample)

    c = sub.add_parser("make-corpus", help="write seeded synthetic blob images")
    c.add_argument("--out", required=True)
    c.add_argument("--count", type=_positive_int, default=20)
    c.add_argument("--size", type=_positive_int, default=128)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_make_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, GmmInterpError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
