"""Command line: regenerate one publication figure from qkrfid CSV files.

Usage::

    qkrfid-figures fig2 --pendulum pen.csv --pert3 p3.csv --pert4 p4.csv \
        --qkr qkr.csv --out fig2.png

Each figure subcommand exposes one option per input slot; run with
``--help`` to list them.  Validation failures exit nonzero and write no
output file.
"""

from __future__ import annotations

import argparse
import sys

from .recipes import RECIPES, SchemaError
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkrfid-figures",
        description="Render the publication figures from qkrfid CSV outputs.",
    )
    sub = parser.add_subparsers(dest="figure", required=True)
    for fid, recipe in RECIPES.items():
        p = sub.add_parser(f"fig{fid}", help=recipe.title)
        optional = set(recipe.extras.get("optional_slots", []))
        for slot in recipe.slots:
            p.add_argument(
                f"--{slot.name.replace('_', '-')}",
                dest=slot.name,
                required=slot.name not in optional,
                help=f"{slot.kind} CSV: {slot.label}",
            )
        p.add_argument("--out", required=True, help="output PNG path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fid = int(args.figure.removeprefix("fig"))
    recipe = RECIPES[fid]
    inputs = {
        slot.name: getattr(args, slot.name)
        for slot in recipe.slots
        if getattr(args, slot.name, None) is not None
    }
    try:
        render(recipe, inputs, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error:{exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
