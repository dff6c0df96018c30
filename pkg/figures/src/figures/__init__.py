"""Figure rendering for magiclab scan outputs.

Consumes the CSV/JSON files the magiclab CLI writes (schema "magiclab-csv
v1") and renders the standard panels: doping scans, ground-state scans,
mutual-SRE comparisons, and benchmark scaling. Rendering is pure: the same
inputs always produce the same plotted series.
"""

from .render import FigureSpec, SchemaMismatch, load_csv, render

__all__ = ["FigureSpec", "SchemaMismatch", "load_csv", "render"]
