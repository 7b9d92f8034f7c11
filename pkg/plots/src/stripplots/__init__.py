"""Figure rendering for the strip solver's delimited outputs."""

from .render import RenderError, load_experiments, load_grid, load_sweep, main

__all__ = ["RenderError", "load_experiments", "load_grid", "load_sweep", "main"]
