"""Minimization of ``S(rho || sigma)`` over PPT states.

The default path follows the central path of

    t * S(rho || sigma) - log det sigma - log det sigma^Gamma,   Tr sigma = 1,

with damped Newton steps, then certifies the result with one Frank-Wolfe
linear minimization (an SDP over PPT states).  On the central path the
Frank-Wolfe gap is at most ``2d / t``.  If the certified gap is still above
``tol``, plain Frank-Wolfe iterations with exact line search continue from
the barrier point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import config
from .divergences import ENTROPY_CUTOFF
from .errors import SolverError
from .linalg import Dims, partial_transpose
from .sdp import build_lmo_sdp, solve
from .sdp.coords import basis, pt_signed_perm, quad_form

LN2 = np.log(2.0)
MAX_FW_ITER = 5000


@dataclass(frozen=True, eq=False)
class RelEntResult:
    value: float
    sigma: np.ndarray
    gap: float
    iterations: int
    status: str


def _f1(a, b):
    """First divided difference of ``log``."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    x = (a - b) / b
    small = np.abs(x) < 1e-8
    diff = np.where(small, 1.0, a - b)
    return np.where(small, (1 - x / 2 + x * x / 3) / b, np.log1p(np.where(small, 0.0, x)) / diff)


def _f2(w):
    """Second divided differences ``f2[k, m, l]`` of ``log`` on the spectrum ``w``."""
    a = w[:, None, None]
    b = w[None, :, None]
    c = w[None, None, :]
    scale = np.maximum(np.maximum(a, b), c)
    far_ac = np.abs(a - c) > 1e-5 * scale
    far_ab = np.abs(a - b) > 1e-5 * scale
    ac = np.where(far_ac, a - c, 1.0)
    gen = (_f1(a, b) - _f1(b, c)) / ac
    am = (a + c) / 2
    ab = np.where(far_ab, am - b, 1.0)
    half = (1 / am - _f1(am, b)) / ab
    m = (a + b + c) / 3
    return np.where(far_ac, gen, np.where(far_ab, half, -1 / (2 * m * m)))


class _Objective:
    """``S(rho || sigma)`` in bits and its derivatives in svec coordinates."""

    def __init__(self, R, dims: Dims):
        self.R = R
        self.dims = dims
        self.cplx = bool(np.iscomplexobj(R) and np.any(np.imag(R)))
        if not self.cplx:
            self.R = np.real(R)
        self.B = basis(dims.d, self.cplx)
        wr = np.linalg.eigvalsh(self.R)
        wr = wr[wr > ENTROPY_CUTOFF]
        self.neg_entropy = float(np.sum(wr * np.log2(wr)))
        eye = np.eye(self.B.N)
        self.E = np.stack([self.B.smat(e) for e in eye])
        self.perm, self.sign = pt_signed_perm(dims.d, dims.dA, dims.dB, self.cplx)
        self.inv = np.empty_like(self.perm)
        self.inv[self.perm] = np.arange(len(self.perm))

    def value(self, S) -> float:
        w, V = np.linalg.eigh(S)
        if w[0] <= 0:
            return np.inf
        Rt = V.conj().T @ self.R @ V
        return self.neg_entropy - float(np.real(np.diag(Rt)) @ np.log2(w))

    def gradient_matrix(self, S):
        """``-Dlog_sigma[rho] / ln 2`` as a matrix."""
        w, V = np.linalg.eigh(S)
        Rt = V.conj().T @ self.R @ V
        G = V @ (_f1(w[:, None], w[None, :]) * Rt) @ V.conj().T
        return -(G + G.conj().T) / (2 * LN2)

    def derivatives(self, S):
        w, V = np.linalg.eigh(S)
        Rt = V.conj().T @ self.R @ V
        G = V @ (_f1(w[:, None], w[None, :]) * Rt) @ V.conj().T
        grad = -self.B.svec((G + G.conj().T) / 2) / LN2
        Ht = np.einsum("ik,akm,ml->ail", V.conj().T, self.E, V)
        A = np.einsum("lk,kml,akm->akml", Rt, _f2(w), Ht)
        T1 = np.real(np.einsum("akml,bml->ab", A, Ht))
        hess = -(T1 + T1.T) / LN2
        return grad, hess

    def pt_vec(self, v):
        return self.sign * v[self.perm]

    def pt_adj(self, v):
        out = np.empty_like(v)
        out[self.perm] = self.sign * v
        return out


def _pd(M) -> bool:
    try:
        np.linalg.cholesky(M)
        return True
    except np.linalg.LinAlgError:
        return False


def _barrier(obj: _Objective, S0, tol: float):
    B = obj.B
    dims = obj.dims
    e = B.eye
    u = B.svec(S0)
    nu = 2 * dims.d
    t = 1.0
    newton_steps = 0

    def phi(uu, tt):
        S = B.smat(uu)
        P = partial_transpose(S, dims)
        if not (_pd(S) and _pd(P)):
            return np.inf
        f = obj.value(S)
        return tt * f - np.linalg.slogdet(S)[1] - np.linalg.slogdet(P)[1]

    while True:
        for _ in range(100):
            S = B.smat(u)
            P = partial_transpose(S, dims)
            Si = np.linalg.inv(S)
            Pi = np.linalg.inv(P)
            gf, hf = obj.derivatives(S)
            g = t * gf - B.svec((Si + Si.conj().T) / 2) - obj.pt_adj(B.svec((Pi + Pi.conj().T) / 2))
            K2 = quad_form(B, (Pi + Pi.conj().T) / 2)
            K2 = (K2 * np.outer(obj.sign, obj.sign))[obj.inv][:, obj.inv]
            H = t * hf + quad_form(B, (Si + Si.conj().T) / 2) + K2
            H = (H + H.T) / 2
            try:
                c = np.linalg.cholesky(H)
                sol = lambda r: np.linalg.solve(c.T, np.linalg.solve(c, r))  # noqa: E731
            except np.linalg.LinAlgError:
                Hp = np.linalg.pinv(H)
                sol = lambda r: Hp @ r  # noqa: E731
            Hg = sol(g)
            He = sol(e)
            mult = (e @ Hg) / (e @ He)
            du = -Hg + mult * He
            dec = -g @ du
            newton_steps += 1
            if dec / 2 <= 1e-11:
                break
            f0 = phi(u, t)
            step = 1.0
            while step > 1e-12:
                cand = u + step * du
                if phi(cand, t) <= f0 - 0.25 * step * dec:
                    break
                step /= 2
            else:
                break
            u = cand
        if nu / t <= tol / 4:
            break
        t *= 8.0
    return B.smat(u), newton_steps


def _lmo(obj: _Objective, G):
    sol = solve(build_lmo_sdp(G, obj.dims))
    if not sol.optimal:
        raise SolverError(f"linear minimization over PPT states failed: {sol.message}", solution=sol)
    nu = sol.blocks[0]
    return nu, min(sol.primal_value, sol.dual_value)


def _fw_gap(obj, S):
    G = obj.gradient_matrix(S)
    nu, low = _lmo(obj, G)
    return float(np.real(np.trace(G @ S)) - low), nu


def relent_ppt(rho, dims, tol: float = 1e-6, method: str = "barrier", max_iter: int = MAX_FW_ITER) -> RelEntResult:
    """``min S(rho || sigma)`` over PPT states ``sigma``, with a certified gap.

    ``method`` is ``"barrier"`` (central path, then Frank-Wolfe polish if
    needed) or ``"frank_wolfe"`` (plain Frank-Wolfe from the default start).
    """
    dims = Dims.of(dims)
    R = np.asarray(rho)
    obj = _Objective(R, dims)
    R = obj.R
    d = dims.d
    if np.linalg.eigvalsh(partial_transpose(R, dims))[0] >= -config.tol():
        # a PPT input is its own minimizer
        return RelEntResult(0.0, R.copy(), 0.0, 0, "optimal")
    S0 = 0.5 * np.eye(d) / d + 0.5 * np.diag(np.real(np.diag(R)))
    it = 0
    if method == "barrier":
        S, it = _barrier(obj, S0, tol)
    elif method == "frank_wolfe":
        S = S0
    else:
        raise ValueError(f"unknown method {method!r}")
    S = (S + S.conj().T) / 2
    gap, nu = _fw_gap(obj, S)
    f = obj.value(S)
    status = "optimal"
    fw = 0
    while gap > tol:
        if fw >= max_iter:
            status = "maxIter"
            break
        D = nu - S
        res = minimize_scalar(lambda g: obj.value(S + g * D), bounds=(0.0, 1.0), method="bounded",
                              options={"xatol": 1e-12})
        gamma = float(res.x)
        if not obj.value(S + gamma * D) < f:
            gamma = 2.0 / (fw + 3.0)
        S = S + gamma * D
        S = (S + S.conj().T) / 2
        f = obj.value(S)
        gap, nu = _fw_gap(obj, S)
        fw += 1
    return RelEntResult(float(f), S, float(gap), it + fw, status)
