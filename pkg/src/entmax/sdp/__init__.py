"""Small dense semidefinite programming engine."""

from .builders import (
    build_emax_sdp,
    build_emin_sdp,
    build_lmo_sdp,
    build_smooth_dmax_sdp,
    build_smooth_emax_sdp,
)
from .problem import SdpProblem, Term, Variable
from .solver import SdpSolution, solve

__all__ = [
    "SdpProblem",
    "SdpSolution",
    "Term",
    "Variable",
    "solve",
    "build_emax_sdp",
    "build_emin_sdp",
    "build_lmo_sdp",
    "build_smooth_emax_sdp",
    "build_smooth_dmax_sdp",
]
