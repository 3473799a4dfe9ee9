"""Publication-style figures from car-following experiment CSV artifacts."""

from .figures import (
    FigureColumn,
    FigureSpec,
    MissingColumnError,
    TrajectoryFormatError,
    load_figure_spec,
    load_learning_curve,
    load_trajectory,
    plot_comparison,
    plot_learning_curve,
)

__all__ = [
    "FigureColumn",
    "FigureSpec",
    "MissingColumnError",
    "TrajectoryFormatError",
    "load_figure_spec",
    "load_learning_curve",
    "load_trajectory",
    "plot_comparison",
    "plot_learning_curve",
]
