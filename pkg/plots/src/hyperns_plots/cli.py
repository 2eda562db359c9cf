"""Command line entry: plot --kind K --in CSV --out IMG."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plot",
        description="Render a hyperns CSV output as an SVG or PNG figure.",
    )
    ap.add_argument("--kind", required=True, choices=KINDS)
    ap.add_argument("--in", dest="inputs", required=True, nargs="+",
                    metavar="CSV", help="input CSV file(s)")
    ap.add_argument("--out", required=True, metavar="IMG",
                    help="output image path (.svg or .png)")
    ap.add_argument("--title", default=None)
    ap.add_argument("--dpi", type=int, default=150)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, inputs=tuple(args.inputs),
                          output=args.out, title=args.title, dpi=args.dpi)
        result = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 1
    for key, val in sorted(result.annotations.items()):
        print(f"{key} = {val:.17g}")
    print(result.path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
