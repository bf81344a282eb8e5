"""fppviz command line: render figures from fpplab CSV files.

Exit codes: 0 success, 1 usage, 2 schema or data error (the message
names the offending column).
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser():
    p = argparse.ArgumentParser(prog="fppviz", description=__doc__)
    p.add_argument("--version", action="version", version=f"fppviz {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure plus its text sidecar")
    r.add_argument("--kind", required=True, choices=KINDS)
    r.add_argument("--csv", required=True, help="input CSV (sweep trials or bp probe)")
    r.add_argument("--out", required=True, help="output image; extension picks SVG/PNG")
    r.add_argument("--agg", default=None, help="aggregate CSV supplying the limit lines")
    r.add_argument(
        "--limits",
        default=None,
        help="explicit limit line value(s), comma separated (e.g. '1.667,1.333')",
    )
    r.add_argument("--linear-x", action="store_true", help="linear instead of log n axis")
    r.add_argument("--title", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    limits = None
    if args.limits:
        limits = tuple(float(x) for x in args.limits.split(","))
    spec = FigureSpec(
        kind=args.kind,
        csv_path=args.csv,
        out_path=args.out,
        agg_path=args.agg,
        limits=limits,
        log_x=not args.linear_x,
        title=args.title,
    )
    try:
        out = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"written={out}")
    print(f"sidecar={out}.sidecar.txt")
    return 0


if __name__ == "__main__":
    sys.exit(main())
