"""make-figures: render budget-curve PNGs from an aggregate CSV."""

from __future__ import annotations

import argparse
import sys

from .plots import DEFAULT_PANELS, FigureDataError, PlotSpec, make_default_figures, plot_budget_curve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="make-figures",
        description="Render budget-curve figures from a writebench aggregate CSV.",
    )
    parser.add_argument("--in", dest="infile", required=True, help="aggregate CSV path")
    parser.add_argument("--out-dir", default="figures", help="directory for PNG output")
    parser.add_argument(
        "--metric", action="append", help="metric to plot (repeatable); default: standard panels"
    )
    parser.add_argument("--regime", action="append", help="regime slice (repeatable)")
    parser.add_argument("--track", action="append", help="track slice (repeatable)")
    return parser


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if not (args.metric or args.regime or args.track):
            paths = make_default_figures(args.infile, args.out_dir)
        else:
            metrics = args.metric or sorted({m for m, _, _ in DEFAULT_PANELS})
            regimes = args.regime or ["default"]
            tracks = args.track or ["privileged"]
            paths = [
                plot_budget_curve(args.infile, PlotSpec(m, r, t), args.out_dir)
                for m in metrics
                for r in regimes
                for t in tracks
            ]
    except FigureDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
