"""Recipes mapping CSV inputs to the seven publication figures.

A recipe lists the named input slots a figure needs, the CSV schema each
slot must satisfy, and the line styles from the figure captions.  Recipes
carry no numerical logic: every transformation (smoothing, rescaling) is
expected to be present in the CSV already.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional

TRACE_HEADERS = (["kick", "fidelity"], ["kick", "fidelity", "smoothed"])
PORTRAIT_HEADER = ["orbit_id", "step", "theta", "I"]
FACTORS_HEADER = ["beta1", "alpha", "objective"]

# caption line styles: full, dashed, chain (dash-dot), dash-dot-dot, dotted
STYLE = {
    "full": "-",
    "dashed": "--",
    "chain": "-.",
    "dotted": ":",
    "dashddot": (0, (3, 1, 1, 1, 1, 1)),
}


class SchemaError(ValueError):
    """An input CSV does not match the schema its slot requires."""


@dataclass
class TableData:
    header: List[str]
    columns: Dict[str, "list"]

    def column(self, name):
        return self.columns[name]

    def __len__(self):
        return len(next(iter(self.columns.values())))


def read_table(path, expected_headers) -> TableData:
    """Read a CSV and enforce one of the expected headers; refuse empty data."""
    with open(path, "r", encoding="ascii") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header not in [list(h) for h in expected_headers]:
            raise SchemaError(
                f"{path}: header {header!r} does not match any of {expected_headers!r}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    columns = {name: [] for name in header}
    for row in rows:
        if len(row) != len(header):
            raise SchemaError(f"{path}: ragged row {row!r}")
        for name, value in zip(header, row):
            columns[name].append(float(value))
    return TableData(header=header, columns=columns)


def trace_series(table: TableData):
    """Kick axis and the plotted series (smoothed when present)."""
    y = table.column("smoothed") if "smoothed" in table.columns else table.column("fidelity")
    return table.column("kick"), y


@dataclass
class Slot:
    """One named CSV input of a figure."""

    name: str
    kind: str                      # "trace" | "portrait" | "factors"
    label: str
    style: object = STYLE["full"]
    color: str = "black"
    marker: Optional[str] = None

    def expected_headers(self):
        return {
            "trace": TRACE_HEADERS,
            "portrait": (PORTRAIT_HEADER,),
            "factors": (FACTORS_HEADER,),
        }[self.kind]


@dataclass
class FigureRecipe:
    """Inputs and styling of one figure."""

    figure_id: int
    title: str
    xlabel: str
    ylabel: str
    slots: List[Slot]
    panels: Optional[List[List[str]]] = None   # slot names per panel, row layout
    extras: dict = field(default_factory=dict)

    def slot(self, name: str) -> Slot:
        for s in self.slots:
            if s.name == name:
                return s
        raise KeyError(name)


def build_recipes() -> Dict[int, FigureRecipe]:
    recipes = {}
    recipes[1] = FigureRecipe(
        figure_id=1,
        title="Phase space: pendulum vs kicked rotor",
        xlabel=r"$\theta$",
        ylabel=r"$I$",
        slots=[
            Slot("map", "portrait", "kicked rotor", style="", color="0.5", marker="."),
            Slot("pendulum", "portrait", "pendulum", style=STYLE["dashed"], color="black"),
        ],
    )
    recipes[2] = FigureRecipe(
        figure_id=2,
        title="Single-rotor fidelity: four descriptions",
        xlabel="kicks",
        ylabel="fidelity",
        slots=[
            Slot("pendulum", "trace", "pendulum", STYLE["dashed"], "green"),
            Slot("pert3", "trace", "perturbative, 3rd order", STYLE["full"], "black"),
            Slot("pert4", "trace", "perturbative, 4th order", STYLE["dashddot"], "blue"),
            Slot("qkr", "trace", "QKR", STYLE["chain"], "red"),
        ],
    )
    recipes[3] = FigureRecipe(
        figure_id=3,
        title="QKR vs pendulum at two quasi-momenta",
        xlabel="kicks",
        ylabel="fidelity",
        slots=[
            Slot("qkr_a", "trace", "QKR", STYLE["full"], "red"),
            Slot("pendulum_a", "trace", "pendulum", STYLE["dashed"], "green"),
            Slot("qkr_b", "trace", "QKR", STYLE["full"], "red"),
            Slot("pendulum_b", "trace", "pendulum", STYLE["dashed"], "green"),
        ],
        panels=[["qkr_a", "pendulum_a"], ["qkr_b", "pendulum_b"]],
    )
    recipes[4] = FigureRecipe(
        figure_id=4,
        title="Ensemble fidelity: QKR vs perturbative",
        xlabel="kicks",
        ylabel="fidelity",
        slots=[
            Slot("qkr_1", "trace", "QKR, low beta1", STYLE["full"], "black"),
            Slot("pert_1", "trace", "perturbative, low beta1", STYLE["dashed"], "black"),
            Slot("qkr_2", "trace", "QKR, middle beta1", STYLE["full"], "red"),
            Slot("pert_2", "trace", "perturbative, middle beta1", STYLE["dashed"], "red"),
            Slot("qkr_3", "trace", "QKR, high beta1", STYLE["full"], "green"),
            Slot("pert_3", "trace", "perturbative, high beta1", STYLE["dashed"], "green"),
        ],
    )
    raw_styles = [
        (STYLE["full"], "black"),
        (STYLE["dotted"], "red"),
        (STYLE["dashed"], "green"),
        (STYLE["chain"], "blue"),
        (STYLE["dashddot"], "magenta"),
    ]
    recipes[5] = FigureRecipe(
        figure_id=5,
        title="Ensemble decays and their rescaled collapse",
        xlabel="kicks",
        ylabel="fidelity",
        slots=(
            [Slot(f"raw_{j}", "trace", f"raw {j}", *raw_styles[j - 1]) for j in range(1, 6)]
            + [Slot(f"rescaled_{j}", "trace", f"rescaled {j}", *raw_styles[j - 1]) for j in range(1, 6)]
        ),
        panels=[[f"raw_{j}" for j in range(1, 6)], [f"rescaled_{j}" for j in range(1, 6)]],
    )
    factor_styles = [
        ("black", "o"),
        ("red", "s"),
        ("green", "D"),
        ("blue", "^"),
    ]
    recipes[6] = FigureRecipe(
        figure_id=6,
        title="Scaling factors for two reference quasi-momenta",
        xlabel=r"$\beta_1$",
        ylabel=r"$\alpha$",
        slots=[
            Slot(f"factors_{j}", "factors", f"set {j}", STYLE["full"],
                 factor_styles[(j - 1) % 4][0], factor_styles[(j - 1) % 4][1])
            for j in range(1, 9)
        ],
        extras={"optional_slots": [f"factors_{j}" for j in range(2, 9)]},
    )
    recipes[7] = FigureRecipe(
        figure_id=7,
        title="Scaling factors: perturbative vs QKR",
        xlabel=r"$\beta_1$",
        ylabel=r"$\alpha$",
        slots=[
            Slot("pert", "factors", "perturbative", STYLE["full"], "black", "o"),
            Slot("qkr", "factors", "QKR", STYLE["full"], "red", "s"),
        ],
        extras={"border": 0.12},
    )
    return recipes


RECIPES = build_recipes()
