"""Budget-curve figure generation for writebench aggregate CSVs."""

from .plots import (
    DEFAULT_PANELS,
    FigureDataError,
    PlotSpec,
    build_series,
    make_default_figures,
    plot_budget_curve,
    read_aggregate,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PANELS",
    "FigureDataError",
    "PlotSpec",
    "build_series",
    "make_default_figures",
    "plot_budget_curve",
    "read_aggregate",
    "render",
]
