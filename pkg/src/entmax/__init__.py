"""Entanglement measures from one-shot relative entropies."""

from . import config
from .divergences import d_max, d_min, relative_entropy, von_neumann_entropy
from .errors import (
    ConvergenceError,
    DimensionError,
    EntmaxError,
    InvalidOperatorError,
    SolverError,
    StateFileError,
)
from .linalg import BipartiteState, Dims, SubnormalizedOperator, partial_trace, partial_transpose
from .measures import (
    MeasureResult,
    e_max,
    e_min,
    e_r,
    entanglement_entropy,
    global_robustness,
    log_negativity,
    log_robustness,
    measure,
)
from .smoothing import constructive_smooth_e_max, smooth_d_max, smooth_e_max

__version__ = "0.1.0"

__all__ = [
    "config",
    "BipartiteState",
    "SubnormalizedOperator",
    "Dims",
    "partial_trace",
    "partial_transpose",
    "d_max",
    "d_min",
    "relative_entropy",
    "von_neumann_entropy",
    "MeasureResult",
    "e_max",
    "e_min",
    "e_r",
    "entanglement_entropy",
    "global_robustness",
    "log_negativity",
    "log_robustness",
    "measure",
    "smooth_d_max",
    "smooth_e_max",
    "constructive_smooth_e_max",
    "EntmaxError",
    "DimensionError",
    "InvalidOperatorError",
    "ConvergenceError",
    "SolverError",
    "StateFileError",
]
