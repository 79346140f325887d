"""Command-line renderer: CSV in, image out.

Exit codes: 0 on success, 2 for schema or I/O problems.
"""

from __future__ import annotations

import argparse
import sys

from .readers import SchemaError, read_scatter, read_sweep
from .render import plot_ber, plot_scatter


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ookplots",
        description="Render ookfusion sweep or scatter CSV files to figures.",
    )
    parser.add_argument("--in", dest="src", required=True, help="input CSV path")
    parser.add_argument(
        "--out", required=True,
        help="output image path; the extension picks the format (png, pdf, svg)",
    )
    parser.add_argument(
        "--kind", required=True, choices=("ber", "scatter"),
        help="which schema the input follows and which figure to draw",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.kind == "ber":
            fig = plot_ber(read_sweep(args.src))
        else:
            fig = plot_scatter(read_scatter(args.src))
        fig.savefig(args.out)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
