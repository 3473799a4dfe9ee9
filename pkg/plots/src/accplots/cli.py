"""Batch figure rendering: `plot learning-curve <csv> <out>`, `plot compare <spec.json>`."""

from __future__ import annotations

import argparse
import sys

from .figures import load_figure_spec, plot_comparison, plot_learning_curve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    lc = sub.add_parser("learning-curve", help="render a training curve figure")
    lc.add_argument("csv")
    lc.add_argument("out")
    cmp_p = sub.add_parser("compare", help="render a trajectory comparison grid")
    cmp_p.add_argument("spec", help="JSON figure spec")
    args = parser.parse_args(argv)
    try:
        if args.command == "learning-curve":
            out = plot_learning_curve(args.csv, args.out)
        else:
            out = plot_comparison(load_figure_spec(args.spec))
    except Exception as err:
        sys.stderr.write(f"{type(err).__name__}: {err}\n")
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
