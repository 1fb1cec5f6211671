"""Regeneration of the publication figures from qkrfid CSV output files."""

from .recipes import RECIPES, FigureRecipe, SchemaError, Slot, read_table
from .render import render

__version__ = "0.1.0"
