"""H-matrix approximability of FEM inverses and triangular factors."""

from ._hinv import (
    BudgetExceeded,
    Discretization,
    Error,
    InvalidArgument,
    NumericalError,
    assemble,
    mesh,
    parse_ranks,
    run_experiment,
    spectral_norm,
)

__all__ = [
    "BudgetExceeded",
    "Discretization",
    "Error",
    "InvalidArgument",
    "NumericalError",
    "assemble",
    "mesh",
    "parse_ranks",
    "run_experiment",
    "spectral_norm",
]
