"""Render BER sweep and decision-scatter CSV files to figures.

This package is a pure consumer of the two documented CSV schemas; it never
recomputes statistics and never imports the simulator.
"""

from .readers import SCATTER_COLUMNS, SWEEP_COLUMNS, ScatterRow, SchemaError, SweepRow
from .readers import read_scatter, read_sweep
from .render import plot_ber, plot_scatter

__version__ = "0.1.0"

__all__ = [
    "SCATTER_COLUMNS",
    "SWEEP_COLUMNS",
    "ScatterRow",
    "SchemaError",
    "SweepRow",
    "plot_ber",
    "plot_scatter",
    "read_scatter",
    "read_sweep",
    "__version__",
]
