"""File-to-file rendering of the figure recipes.

``render(recipe, inputs, out_path)`` reads the CSVs named by ``inputs``
(slot name -> path), validates each against its slot schema, and writes
one PNG.  No output file is written when any input fails validation.
Timestamps and software tags are suppressed so reruns produce identical
bytes.
"""

from __future__ import annotations

import math
from typing import Dict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .recipes import FigureRecipe, SchemaError, read_table, trace_series

_PNG_METADATA = {"Software": None}


def _load_inputs(recipe: FigureRecipe, inputs: Dict[str, str]):
    optional = set(recipe.extras.get("optional_slots", []))
    tables = {}
    for slot in recipe.slots:
        path = inputs.get(slot.name)
        if path is None:
            if slot.name in optional:
                continue
            raise SchemaError(f"figure {recipe.figure_id}: missing input slot {slot.name!r}")
        tables[slot.name] = read_table(path, slot.expected_headers())
    unknown = set(inputs) - {s.name for s in recipe.slots}
    if unknown:
        raise SchemaError(f"figure {recipe.figure_id}: unknown slots {sorted(unknown)}")
    return tables


def _plot_trace(ax, slot, table):
    x, y = trace_series(table)
    ax.plot(x, y, linestyle=slot.style, color=slot.color, linewidth=1.0, label=slot.label)


def _plot_portrait(ax, slot, table):
    orbit_ids = table.column("orbit_id")
    theta = table.column("theta")
    momenta = table.column("I")
    per_orbit = {}
    for oid, th, i_val in zip(orbit_ids, theta, momenta):
        per_orbit.setdefault(oid, ([], []))
        per_orbit[oid][0].append(th)
        per_orbit[oid][1].append(i_val)
    first = True
    for oid in sorted(per_orbit):
        th, i_val = per_orbit[oid]
        if slot.marker and not slot.style:
            ax.plot(th, i_val, linestyle="", marker=slot.marker, markersize=1.2,
                    color=slot.color, label=slot.label if first else None)
        else:
            order = sorted(range(len(th)), key=lambda j: th[j])
            ax.plot([th[j] for j in order], [i_val[j] for j in order],
                    linestyle=slot.style, color=slot.color, linewidth=0.9,
                    label=slot.label if first else None)
        first = False


def _plot_factors(ax, slot, table):
    ax.plot(
        table.column("beta1"),
        table.column("alpha"),
        linestyle="",
        marker=slot.marker or "o",
        color=slot.color,
        label=slot.label,
    )


_PLOTTERS = {"trace": _plot_trace, "portrait": _plot_portrait, "factors": _plot_factors}


def render(recipe: FigureRecipe, inputs: Dict[str, str], out_path: str) -> str:
    """Render one figure; returns the output path."""
    tables = _load_inputs(recipe, inputs)

    if recipe.panels:
        panel_names = [[n for n in panel if n in tables] for panel in recipe.panels]
        fig, axes = plt.subplots(
            len(panel_names), 1, figsize=(6.4, 3.2 * len(panel_names)), squeeze=False
        )
        axes = [row[0] for row in axes]
    else:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        axes = [ax]
        panel_names = [[s.name for s in recipe.slots if s.name in tables]]

    for ax, names in zip(axes, panel_names):
        for name in names:
            slot = recipe.slot(name)
            _PLOTTERS[slot.kind](ax, slot, tables[name])
        ax.set_xlabel(recipe.xlabel)
        ax.set_ylabel(recipe.ylabel)
        if recipe.figure_id == 1:
            ax.set_xlim(0.0, 2.0 * math.pi)
        border = recipe.extras.get("border")
        if border is not None:
            ax.axvline(border, linestyle="--", color="0.4", linewidth=0.8)
        ax.legend(fontsize=8, frameon=False)
    axes[0].set_title(recipe.title, fontsize=10)

    fig.tight_layout()
    fig.savefig(out_path, dpi=150, metadata=_PNG_METADATA)
    plt.close(fig)
    return out_path
