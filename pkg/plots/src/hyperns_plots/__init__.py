"""Figures from hyperns run outputs.

Reads the diagnostics and sweep CSV files the solver package writes and
renders them as SVG or PNG. Strictly read-only over those files: nothing
here imports the solver or recomputes physics, so byte-identical input
produces identical annotations.
"""

from .figures import KINDS, FigureSpec, RenderResult, render
from .tables import SchemaError, Table, load_table

__all__ = [
    "KINDS",
    "FigureSpec",
    "RenderResult",
    "render",
    "SchemaError",
    "Table",
    "load_table",
]

__version__ = "0.1.0"
