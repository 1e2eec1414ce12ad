"""Publication-style figures from trilevel sweep CSV files.

Four figure kinds cover the published plots: coupling-plane heatmaps with a
separatrix overlay, excitation-distribution bar charts with a Poisson-dot
overlay, semiclassical-vs-exact comparison curves, and 3D surface/mesh
comparisons.  Rendering is read-only over the CSV; a dump mode exposes the
plotted series exactly as read for byte-level verification.
"""

from .render import FigureError, FigureSpec, load_csv, main, render

__all__ = ["FigureError", "FigureSpec", "load_csv", "main", "render"]
