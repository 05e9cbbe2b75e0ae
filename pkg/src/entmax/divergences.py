"""Max-, min- and Umegaki relative entropies (base-2 logarithms).

All functions accept subnormalized first arguments; the second argument is
any positive operator.  Values can then be negative, e.g.
``d_max(c * rho, rho) = log2(c)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .errors import DimensionError
from .linalg import hermitian

#: Eigenvalues below this are dropped from entropy sums.
ENTROPY_CUTOFF = 1e-14

#: Residual allowed when testing supp(rho) against supp(sigma).
SUPPORT_RESIDUAL = 1e-8


@dataclass(frozen=True, eq=False)
class DivergenceValue:
    """A divergence in bits.

    ``finite`` is False exactly when the support condition of the definition
    fails; ``value`` is then ``inf``.  ``witness`` holds the operator that
    realizes the value (the support projector for ``d_min``); ``slack`` is
    the certificate residual where one applies.
    """

    value: float
    finite: bool
    witness: np.ndarray | None = None
    slack: float | None = None

    def __float__(self):
        return float(self.value)


def _pair(rho, sigma):
    R = hermitian(getattr(rho, "matrix", rho))
    S = hermitian(getattr(sigma, "matrix", sigma))
    if R.shape != S.shape:
        raise DimensionError(f"shapes {R.shape} and {S.shape} differ")
    return R, S


def _supported(wr, Vr, ws, Vs, tol) -> bool:
    # every eigenvector of rho with weight must lie in supp(sigma)
    Vr = Vr[:, wr > tol]
    if Vr.shape[1] == 0:
        return True
    Vs = Vs[:, ws > tol]
    resid = Vr - Vs @ (Vs.conj().T @ Vr)
    return bool(np.max(np.linalg.norm(resid, axis=0)) <= SUPPORT_RESIDUAL)


def support_included(rho, sigma, tol: float | None = None) -> bool:
    tol = config.tol() if tol is None else tol
    R, S = _pair(rho, sigma)
    wr, Vr = np.linalg.eigh(R)
    ws, Vs = np.linalg.eigh(S)
    return _supported(wr, Vr, ws, Vs, tol)


def d_max(rho, sigma) -> DivergenceValue:
    """``log2 min{l : rho <= l sigma}`` computed spectrally on supp(sigma)."""
    tol = config.tol()
    R, S = _pair(rho, sigma)
    wr, Vr = np.linalg.eigh(R)
    ws, Vs = np.linalg.eigh(S)
    if not _supported(wr, Vr, ws, Vs, tol):
        return DivergenceValue(np.inf, False)
    keep = ws > tol
    if not np.any(wr > tol):
        return DivergenceValue(-np.inf, True, slack=0.0)
    B = Vs[:, keep] / np.sqrt(ws[keep])
    lam = np.linalg.eigvalsh(B.conj().T @ R @ B)[-1]
    value = float(np.log2(lam))
    slack = float(np.linalg.eigvalsh(lam * S - R)[0])
    return DivergenceValue(value, True, slack=slack)


def d_min(rho, sigma) -> DivergenceValue:
    """``-log2 Tr(pi sigma)`` with ``pi`` the support projector of ``rho``."""
    tol = config.tol()
    R, S = _pair(rho, sigma)
    wr, Vr = np.linalg.eigh(R)
    P = Vr[:, wr > tol]
    pi = P @ P.conj().T
    overlap = float(np.trace(pi @ S).real)
    if overlap <= 1e-14:
        return DivergenceValue(np.inf, False, witness=pi)
    return DivergenceValue(float(-np.log2(overlap)), True, witness=pi)


def von_neumann_entropy(rho) -> float:
    """``-sum w log2 w`` over eigenvalues above 1e-14."""
    w = np.linalg.eigvalsh(hermitian(getattr(rho, "matrix", rho)))
    w = w[w > ENTROPY_CUTOFF]
    return float(max(-np.sum(w * np.log2(w)), 0.0))


def relative_entropy(rho, sigma) -> DivergenceValue:
    """``Tr rho (log2 rho - log2 sigma)``; infinite unless supp rho is in supp sigma."""
    tol = config.tol()
    R, S = _pair(rho, sigma)
    wr, Vr = np.linalg.eigh(R)
    ws, Vs = np.linalg.eigh(S)
    if not _supported(wr, Vr, ws, Vs, tol):
        return DivergenceValue(np.inf, False)
    r = wr > ENTROPY_CUTOFF
    s = ws > tol
    first = np.sum(wr[r] * np.log2(wr[r]))
    overlap = np.abs(Vr[:, r].conj().T @ Vs[:, s]) ** 2
    second = np.sum(wr[r][:, None] * overlap * np.log2(ws[s])[None, :])
    return DivergenceValue(float(first - second), True)
