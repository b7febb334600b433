"""Risk ratio for the treated from fuzzy regression-discontinuity data."""

from ._core import (
    MODEL_TAGS,
    InputError,
    NumericalError,
    cell_counts,
    diagnose,
    estimate,
    explore,
    generate,
    gmm,
    load_csv,
    plug_in_rrt,
    simulate,
)

__all__ = [
    "MODEL_TAGS",
    "InputError",
    "NumericalError",
    "cell_counts",
    "diagnose",
    "estimate",
    "explore",
    "generate",
    "gmm",
    "load_csv",
    "plug_in_rrt",
    "simulate",
]
