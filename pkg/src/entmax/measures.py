"""Entanglement measures of bipartite states.

The separable set is relaxed to the PPT set everywhere; ``exact`` in the
result is True only when the two sets coincide (qubit-qubit, qubit-qutrit,
or a trivial factor) or a closed form is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .divergences import d_max
from .errors import InvalidOperatorError, SolverError
from .linalg import (
    BipartiteState,
    Dims,
    _dims_of,
    _matrix,
    hermitian,
    min_eig,
    partial_trace,
    partial_transpose,
    schmidt_decompose,
    support_projector,
    trace_norm,
)
from .relent import relent_ppt
from .sdp import build_emax_sdp, build_emin_sdp, solve

NAMES = ("emax", "rg", "lrg", "emin", "ln", "er")
METHODS = ("ppt_sdp", "closed_form", "frank_wolfe")

#: Below this robustness the noise state is not defined.
ROBUSTNESS_FLOOR = 1e-10

#: Purity threshold for closed-form evaluation.
PURITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MeasureResult:
    """A measure value with its certificates.

    ``certificates`` may hold ``X`` (optimal ``(1 + s) sigma*``), ``sigma``
    (closest PPT state) and ``pi`` (noise state).  ``residuals`` records how
    well they satisfy their defining constraints.
    """

    name: str
    value: float
    method: str
    certificates: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    relaxation: str = "ppt"
    exact: bool = False
    status: str = "optimal"

    def __float__(self):
        return float(self.value)


def _state(rho, dims=None) -> BipartiteState:
    if isinstance(rho, BipartiteState):
        return rho
    return BipartiteState(hermitian(_matrix(rho)), _dims_of(rho, dims))


def ppt_exact(dims) -> bool:
    dims = Dims.of(dims)
    small, large = sorted(dims.as_tuple())
    return small == 1 or (small == 2 and large <= 3)


def is_pure(rho) -> bool:
    R = _matrix(rho)
    return float(np.real(np.trace(R @ R))) >= 1 - PURITY_TOL


def _pure_vector(rho: BipartiteState) -> np.ndarray:
    w, V = np.linalg.eigh(rho.matrix)
    return V[:, -1]


def _check_method(method, allowed):
    if method not in allowed:
        raise ValueError(f"method {method!r} not available here; choose from {allowed}")


def pure_state_closed_forms(psi, dims) -> dict:
    """Closed forms via the Schmidt coefficients ``c`` of ``psi``.

    ``emax = 2 log2 sum c``, ``rg = (sum c)^2 - 1``, ``ln = emax`` and
    ``entropyOfEntanglement = -sum c^2 log2 c^2``.
    """
    sd = schmidt_decompose(psi, dims)
    c = sd.coefficients
    total = float(np.sum(c))
    p = c[c > 1e-12] ** 2
    ent = float(max(-np.sum(p * np.log2(p)), 0.0))
    emax = 2 * np.log2(total)
    return {"emax": float(emax), "rg": total**2 - 1, "ln": float(emax), "entropyOfEntanglement": ent}


# -- max-relative entropy of entanglement and global robustness -------------


def _emax_certificate(rho: BipartiteState):
    """Solve the E_max SDP and return a repaired, exactly feasible ``X``."""
    R = rho.matrix
    dims = rho.dims
    if min_eig(partial_transpose(R, dims)) >= -config.tol():
        res = {"ppt": True, "X-rho": 0.0, "X^G": min_eig(partial_transpose(R, dims)), "gap": 0.0,
               "lower": 1.0, "iterations": 0}
        return R.copy(), res
    sol = solve(build_emax_sdp(rho))
    if not sol.optimal:
        raise SolverError(f"E_max SDP ended with status {sol.status}: {sol.message}", solution=sol)
    X = sol.blocks[0]
    X = hermitian(X, tol=np.inf)
    # shift by the worst violation so both constraints hold exactly
    viol = max(0.0, -min_eig(X - R), -min_eig(partial_transpose(X, dims)))
    if viol > 0:
        X = X + viol * np.eye(dims.d)
    res = {
        "ppt": False,
        "X-rho": min_eig(X - R),
        "X^G": min_eig(partial_transpose(X, dims)),
        "gap": sol.gap,
        "lower": sol.dual_value,
        "iterations": sol.iterations,
    }
    return X, res


def _robustness_parts(rho: BipartiteState):
    X, res = _emax_certificate(rho)
    # a PPT input is its own optimizer; report the exact trace
    tr = 1.0 if res["ppt"] else float(np.trace(X).real)
    s = tr - 1.0
    certs = {"X": X, "sigma": X / tr}
    if s > ROBUSTNESS_FLOOR:
        certs["pi"] = (X - rho.matrix) / s
    sigma_check = d_max(rho, certs["sigma"])
    res = dict(res)
    res["dmax_sigma"] = sigma_check.value
    return tr, s, certs, res


def e_max(rho, dims=None, method: str = "ppt_sdp") -> MeasureResult:
    """``min_sigma D_max(rho || sigma)`` over PPT ``sigma``, as ``log2 Tr X*``."""
    rho = _state(rho, dims)
    _check_method(method, ("ppt_sdp", "closed_form"))
    if method == "closed_form":
        if not is_pure(rho):
            raise InvalidOperatorError("closed_form needs a pure input state")
        cf = pure_state_closed_forms(_pure_vector(rho), rho.dims)
        return MeasureResult("emax", cf["emax"], "closed_form", exact=True)
    tr, s, certs, res = _robustness_parts(rho)
    return MeasureResult("emax", float(np.log2(tr)), "ppt_sdp", certs, res, exact=ppt_exact(rho.dims))


def global_robustness(rho, dims=None, method: str = "ppt_sdp") -> MeasureResult:
    """``R_g = Tr X* - 1``; the noise certificate ``pi`` is omitted when ``R_g`` vanishes."""
    rho = _state(rho, dims)
    _check_method(method, ("ppt_sdp", "closed_form"))
    if method == "closed_form":
        if not is_pure(rho):
            raise InvalidOperatorError("closed_form needs a pure input state")
        cf = pure_state_closed_forms(_pure_vector(rho), rho.dims)
        return MeasureResult("rg", cf["rg"], "closed_form", exact=True)
    tr, s, certs, res = _robustness_parts(rho)
    return MeasureResult("rg", s, "ppt_sdp", certs, res, exact=ppt_exact(rho.dims))


def log_robustness(rho, dims=None, method: str = "ppt_sdp") -> MeasureResult:
    """``log2(1 + R_g)``, numerically the same optimization as :func:`e_max`."""
    r = e_max(rho, dims, method)
    return MeasureResult("lrg", r.value, r.method, r.certificates, r.residuals, r.relaxation, r.exact)


# -- other measures -------------------------------------------------------------


def log_negativity(rho, dims=None) -> MeasureResult:
    """``log2 || rho^Gamma ||_1``."""
    rho = _state(rho, dims)
    value = float(np.log2(trace_norm(partial_transpose(rho.matrix, rho.dims))))
    return MeasureResult("ln", max(value, 0.0), "closed_form", relaxation="none", exact=True)


def e_min(rho, dims=None) -> MeasureResult:
    """``-log2 max Tr(pi sigma)`` over PPT ``sigma`` with ``pi`` the support of ``rho``."""
    rho = _state(rho, dims)
    pi = support_projector(rho.matrix)
    d = rho.dims.d
    if np.linalg.matrix_rank(pi, tol=0.5) == d:
        return MeasureResult("emin", 0.0, "ppt_sdp", {"sigma": np.eye(d) / d}, {"overlap": 1.0},
                             exact=ppt_exact(rho.dims))
    if min_eig(partial_transpose(rho.matrix, rho.dims)) >= -config.tol():
        # a PPT input is itself a feasible sigma with full overlap
        return MeasureResult("emin", 0.0, "ppt_sdp", {"sigma": rho.matrix.copy()}, {"overlap": 1.0},
                             exact=ppt_exact(rho.dims))
    sol = solve(build_emin_sdp(pi, rho.dims))
    if not sol.optimal:
        raise SolverError(f"E_min SDP ended with status {sol.status}: {sol.message}", solution=sol)
    overlap = -sol.primal_value
    sigma = hermitian(sol.blocks[0], tol=np.inf)
    res = {"overlap": overlap, "gap": sol.gap, "sigma": min_eig(sigma),
           "sigma^G": min_eig(partial_transpose(sigma, rho.dims))}
    return MeasureResult("emin", float(-np.log2(overlap)), "ppt_sdp", {"sigma": sigma}, res,
                         exact=ppt_exact(rho.dims))


def e_r(rho, dims=None, tol: float = 1e-6, method: str = "frank_wolfe", start: str = "barrier") -> MeasureResult:
    """Relative entropy of entanglement over PPT states.

    The value carries a Frank-Wolfe gap certificate: the true PPT optimum
    lies in ``[value - gap, value]``.  ``start="barrier"`` warm-starts the
    Frank-Wolfe phase at a central-path point; ``start="plain"`` runs plain
    Frank-Wolfe from the default initial state.  ``method="closed_form"``
    returns the entropy of entanglement of a pure input.
    """
    rho = _state(rho, dims)
    _check_method(method, ("frank_wolfe", "closed_form"))
    if method == "closed_form":
        if not is_pure(rho):
            raise InvalidOperatorError("closed_form needs a pure input state")
        cf = pure_state_closed_forms(_pure_vector(rho), rho.dims)
        return MeasureResult("er", cf["entropyOfEntanglement"], "closed_form", exact=True)
    r = relent_ppt(rho.matrix, rho.dims, tol=tol, method="barrier" if start == "barrier" else "frank_wolfe")
    res = {"gap": r.gap, "iterations": r.iterations, "sigma": min_eig(r.sigma),
           "sigma^G": min_eig(partial_transpose(r.sigma, rho.dims))}
    return MeasureResult("er", r.value, "frank_wolfe", {"sigma": r.sigma}, res,
                         exact=ppt_exact(rho.dims), status=r.status)


def entanglement_entropy(rho, dims=None) -> float:
    """``S(Tr_B rho)`` in bits (meaningful for pure ``rho``)."""
    rho = _state(rho, dims)
    w = np.linalg.eigvalsh(partial_trace(rho, keep="A"))
    w = w[w > 1e-14]
    return float(max(-np.sum(w * np.log2(w)), 0.0))


MEASURES = {
    "emax": e_max,
    "rg": global_robustness,
    "lrg": log_robustness,
    "emin": e_min,
    "ln": log_negativity,
    "er": e_r,
}


def measure(name: str, rho, dims=None, **kw) -> MeasureResult:
    if name not in MEASURES:
        raise ValueError(f"unknown measure {name!r}; expected one of {NAMES}")
    return MEASURES[name](rho, dims, **kw)
