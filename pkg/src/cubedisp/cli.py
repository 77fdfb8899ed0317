"""Command-line entry point: ``cubedisp <stage> [flags]``.

Exit status is 0 on success, 1 on invalid input (the message names the
file or row) and 2 on internal assertion failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import _backend, pipeline, selftest
from .errors import AttributionError, ValidationError

STAGES = ("rasterize", "ingest", "volumes", "persist", "trace", "report", "all")


def _shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}") from None
    if not shape or any(n < 1 for n in shape):
        raise argparse.ArgumentTypeError(f"bad shape {text!r}")
    return shape


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="plain-text pipeline config ([pipeline] key = value)")
    common.add_argument("--out-dir", default="out", help="output directory (default: out)")
    common.add_argument("--groups", help="comma-separated subset of stay,city,cmadrid,outside")
    common.add_argument("--grid-size", type=int, help="raster cells per side (default 100)")
    common.add_argument("--year-range", help="first:last year (default 2004:2023)")
    common.add_argument("--importance-threshold", type=int, help="persistence above which a feature is important (default 2)")
    common.add_argument("--workers", type=int, help="parallel workers (default: cores, at most 4)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cubedisp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES:
        p = sub.add_parser(name, parents=[common], help=f"run the {name} stage")
        if name == "persist":
            p.add_argument("--volume", help="single volume file; writes --out instead of the group layout")
            p.add_argument("--out", help="barcode CSV path for --volume")
    p = sub.add_parser("selftest", parents=[common], help="oracle-equivalence fuzz test")
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--max-shape", type=_shape, default=(5, 5, 4))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("cython", "python"))
    return parser


def settings_from_args(args) -> pipeline.Settings:
    s = pipeline.load_settings(args.config)
    if args.groups:
        s.groups = pipeline.parse_groups(args.groups)
    if args.grid_size is not None:
        if args.grid_size < 1:
            raise ValidationError("--grid-size must be positive")
        s.grid_size = args.grid_size
    if args.year_range:
        s.years = pipeline.parse_year_range(args.year_range)
    if args.importance_threshold is not None:
        s.importance_threshold = args.importance_threshold
    if args.workers is not None:
        s.workers = max(1, args.workers)
    return s


def _selftest(args) -> int:
    with pipeline.stage("selftest", cases=args.cases, backend=args.backend or _backend.NAME):
        mismatches = selftest.run(args.cases, args.max_shape, args.seed, args.backend)
    for m in mismatches[:20]:
        print(f"MISMATCH case={m.case} shape={m.shape} t={m.t} {m.kind}: expected {m.expected}, got {m.got}")
    print(f"selftest: {args.cases} cases, {len(mismatches)} mismatches")
    return 0 if not mismatches else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "selftest":
            return _selftest(args)
        s = settings_from_args(args)
        out = Path(args.out_dir)
        if args.command == "persist" and args.volume:
            target = Path(args.out) if args.out else Path(args.volume).with_suffix(".barcode.csv")
            with pipeline.stage("persist", volume=args.volume):
                pipeline.persist_file(Path(args.volume), target)
            return 0
        getattr(pipeline, f"run_{args.command}")(s, out)
        return 0
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (AssertionError, AttributionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
