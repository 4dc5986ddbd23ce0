"""Batch figure rendering for results and sweep CSV files."""

from .figures import (
    KINDS,
    LEGEND_ORDER,
    RESULT_COLUMNS,
    SWEEP_COLUMNS,
    PlotJob,
    SchemaError,
    build_figure,
    read_results,
    read_sweep,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "LEGEND_ORDER",
    "RESULT_COLUMNS",
    "SWEEP_COLUMNS",
    "PlotJob",
    "SchemaError",
    "build_figure",
    "read_results",
    "read_sweep",
    "render",
    "__version__",
]
