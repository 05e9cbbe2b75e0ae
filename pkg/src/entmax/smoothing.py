"""Smooth max-relative entropies, the explicit smoothing construction, and
finite-copy probes.

Smoothing ball: ``B^eps(rho) = {rho_bar >= 0 : ||rho_bar - rho||_1 <= eps,
Tr rho_bar <= Tr rho}``.  For ``eps >= Tr rho`` the zero operator lies in the
ball and every smooth max-quantity is ``-inf``; such cases are reported as
degenerate rather than solved.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .divergences import d_max, d_min
from .errors import InvalidOperatorError, SolverError
from .linalg import (
    Dims,
    SubnormalizedOperator,
    _dims_of,
    _matrix,
    hermitian,
    min_eig,
    positive_part_projector,
    psd_inv_sqrt,
    psd_sqrt,
    tensor_power,
    trace_norm,
)
from .measures import e_max, e_r
from .sdp import build_smooth_dmax_sdp, build_smooth_emax_sdp, solve

BISECTION_STEPS = 60
PRECONDITION_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class SmoothingRecord:
    """Outcome of the explicit smoothing ``rho' = T rho T^dag``.

    ``epsilon`` is the guaranteed bound ``sqrt(8 Tr Delta)`` on
    ``||rho - rho'||_1``; ``diagnostics`` holds the achieved distance, the
    order slack ``min eig(2^lam sigma - rho')``, the largest eigenvalue of
    ``(T + T^dag)/2`` and the overlap defect ``1 - |Tr(rho T)|``.
    """

    lam: float
    epsilon: float
    delta_trace: float
    smoothed_state: SubnormalizedOperator
    projector: np.ndarray
    T: np.ndarray
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class RegularizationProbe:
    copies: int
    epsilon: float
    values_per_copy: list
    er_reference: float
    subadditivity: dict | None = None


def is_degenerate(rho, eps: float) -> bool:
    """True when the zero operator lies in the smoothing ball."""
    return eps >= float(np.trace(_matrix(rho)).real)


def _check_eps(eps):
    if not eps >= 0:
        raise ValueError(f"eps must be nonnegative, got {eps!r}")


def _solved(sol, what):
    if not sol.optimal:
        raise SolverError(f"{what} SDP ended with status {sol.status}: {sol.message}", solution=sol)
    return sol


def smooth_d_max(rho, sigma, eps: float) -> float:
    """``min D_max(rho_bar || sigma)`` over the smoothing ball, in bits."""
    _check_eps(eps)
    if eps == 0:
        return d_max(rho, sigma).value
    if is_degenerate(rho, eps):
        return -np.inf
    sol = solve(build_smooth_dmax_sdp(_matrix(rho), _matrix(sigma), eps))
    if sol.status == "infeasible":
        return np.inf
    _solved(sol, "smooth D_max")
    return float(np.log2(sol.primal_value))


def smooth_e_max(rho, eps: float, dims=None) -> float:
    """``min E_max(rho_bar)`` over the smoothing ball (PPT relaxation), in bits."""
    _check_eps(eps)
    dims = _dims_of(rho, dims)
    if eps == 0:
        return e_max(_matrix(rho), dims).value
    if is_degenerate(rho, eps):
        return -np.inf
    sol = _solved(solve(build_smooth_emax_sdp(_matrix(rho), eps, dims)), "smooth E_max")
    return float(np.log2(sol.primal_value))


# -- explicit construction -------------------------------------------------


def lemma3_epsilon(rho, sigma, lam: float):
    """``(sqrt(8 Tr[P rho]), P)`` with ``P`` the projector onto ``rho > 2^lam sigma``."""
    R = hermitian(_matrix(rho))
    P = positive_part_projector(R, 2.0**lam * hermitian(_matrix(sigma)), strict=True)
    weight = max(float(np.trace(P @ R).real), 0.0)
    return float(np.sqrt(8 * weight)), P


def delta_split(rho, sigma, lam: float):
    """``(Delta+, Delta-)`` with ``rho - 2^lam sigma = Delta+ - Delta-``, both PSD."""
    if not np.isfinite(lam):
        raise ValueError(f"lam must be finite, got {lam!r}")
    D = hermitian(_matrix(rho)) - 2.0**lam * hermitian(_matrix(sigma))
    w, V = np.linalg.eigh(D)
    plus = (V * np.clip(w, 0, None)) @ V.conj().T
    minus = (V * np.clip(-w, 0, None)) @ V.conj().T
    return plus, minus


def lemma2_smooth(rho, sigma, lam: float, delta) -> SmoothingRecord:
    """Smooth ``rho`` below ``2^lam sigma`` given ``rho <= 2^lam sigma + delta``.

    ``T = alpha^{1/2} beta^{-1/2}`` with ``alpha = 2^lam sigma`` and
    ``beta = alpha + delta`` (pseudo-inverse off the support of ``beta``),
    and ``rho' = T rho T^dag``.
    """
    R = hermitian(_matrix(rho))
    dims = getattr(rho, "dims", None) or Dims(1, R.shape[0])
    S = hermitian(_matrix(sigma))
    Dl = hermitian(_matrix(delta))
    if min_eig(Dl) < -PRECONDITION_SLACK:
        raise InvalidOperatorError("delta must be positive semidefinite")
    alpha = 2.0**lam * S
    beta = alpha + Dl
    slack = min_eig(beta - R)
    if slack < -PRECONDITION_SLACK:
        raise InvalidOperatorError(f"precondition rho <= 2^lam sigma + delta fails (slack {slack:.3e})")
    T = psd_sqrt(alpha) @ psd_inv_sqrt(beta)
    out = T @ R @ T.conj().T
    out = (out + out.conj().T) / 2
    tr_delta = max(float(np.trace(Dl).real), 0.0)
    P = positive_part_projector(R, alpha, strict=True)
    tbar = (T + T.conj().T) / 2
    overlap = abs(np.trace(R @ T))
    diag = {
        "distance": trace_norm(R - out),
        "order_slack": min_eig(alpha - out),
        "tbar_max": float(np.linalg.eigvalsh(tbar)[-1]),
        "overlap_defect": float(1 - overlap),
        "precondition_slack": slack,
    }
    state = SubnormalizedOperator(out, dims)
    return SmoothingRecord(float(lam), float(np.sqrt(8 * tr_delta)), tr_delta, state, P, T, diag)


def lemma3_smooth(rho, sigma, lam: float) -> SmoothingRecord:
    """:func:`lemma2_smooth` with ``delta`` the positive part of ``rho - 2^lam sigma``."""
    plus, _ = delta_split(rho, sigma, lam)
    return lemma2_smooth(rho, sigma, lam, plus)


def lambda_for_epsilon(rho, sigma, eps: float, steps: int = BISECTION_STEPS) -> float:
    """Least ``lam`` (to bisection accuracy) whose explicit bound reaches ``eps``.

    Bisection keeps the upper end feasible, so the returned ``lam`` always
    satisfies ``lemma3_epsilon(rho, sigma, lam)[0] <= eps``.  Returns
    ``-inf`` when every ``lam`` qualifies (``eps >= sqrt 8``).
    """
    _check_eps(eps)
    if eps >= np.sqrt(8.0):
        return -np.inf
    hi = d_max(rho, sigma).value
    if not np.isfinite(hi):
        return np.inf
    if lemma3_epsilon(rho, sigma, hi)[0] > eps:
        # the support-restricted value can sit within rounding of a jump
        hi = hi + 1e-12
    lo = d_min(rho, sigma).value
    lo = min(lo, hi) - 1.0 if np.isfinite(lo) else hi - 1.0
    while lemma3_epsilon(rho, sigma, lo)[0] <= eps:
        lo -= 2 * (hi - lo)
        if lo < -1e3:
            return -np.inf
    for _ in range(steps):
        mid = (lo + hi) / 2
        if lemma3_epsilon(rho, sigma, mid)[0] <= eps:
            hi = mid
        else:
            lo = mid
    return float(hi)


def constructive_smooth_e_max(rho, eps: float, dims=None) -> float:
    """Upper bound on the smooth E_max from the explicit construction.

    Uses the closest PPT state ``sigma*`` of the non-smooth problem, so the
    bound is ``lambda_for_epsilon(rho, sigma*, eps)``.
    """
    _check_eps(eps)
    dims = _dims_of(rho, dims)
    r = e_max(_matrix(rho), dims)
    if eps == 0:
        return r.value
    return lambda_for_epsilon(_matrix(rho), r.certificates["sigma"], eps)


# -- probes ------------------------------------------------------------------


def regularization_probe(rho, eps: float, max_copies: int = 3, dims=None, er_tol: float = 1e-6,
                         jobs: int = 1) -> RegularizationProbe:
    """Per-copy smooth E_max of ``rho^{(x)n}`` for ``n = 1..max_copies``.

    Also records the two-copy check ``E^{2 eps}(rho^{(x)2}) <= 2 E^{eps}(rho)``
    when ``max_copies >= 2``.  Only finite-n values are reported.
    """
    _check_eps(eps)
    dims = _dims_of(rho, dims)
    R = _matrix(rho)
    if max_copies < 1:
        raise ValueError("max_copies must be >= 1")
    powers = [tensor_power(R, n, dims) for n in range(1, max_copies + 1)]

    def one(n):
        M, dn = powers[n - 1]
        return n, smooth_e_max(M, eps, dn) / n

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            values = list(ex.map(one, range(1, max_copies + 1)))
    else:
        values = [one(n) for n in range(1, max_copies + 1)]
    sub = None
    if max_copies >= 2:
        M2, d2 = powers[1]
        lhs = smooth_e_max(M2, 2 * eps, d2)
        rhs = 2 * values[0][1]
        sub = {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "pass": bool(lhs <= rhs + 1e-6)}
    er = e_r(R, dims, tol=er_tol).value
    return RegularizationProbe(max_copies, float(eps), values, er, sub)


def spectral_overlap(rho, sigma, n: int, gamma: float, dims=None) -> float:
    """``Tr[{rho^n >= 2^{n gamma} sigma^n} rho^n]`` for ``n`` copies."""
    dims = _dims_of(rho, dims)
    Rn, dn = tensor_power(_matrix(rho), n, dims)
    Sn, _ = tensor_power(_matrix(sigma), n, dims)
    P = positive_part_projector(Rn, 2.0 ** (n * gamma) * Sn, strict=False)
    return float(np.clip(np.trace(P @ Rn).real, 0.0, 1.0))
