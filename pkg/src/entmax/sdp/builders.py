"""SDP formulations used by the measures and smoothing modules.

Every builder chooses real-symmetric variables when its data are real and
complex-Hermitian variables otherwise; the partial transpose maps each class
to itself, so the optimum is unchanged.
"""

from __future__ import annotations

import numpy as np

from ..linalg import Dims, _dims_of, _matrix, hermitian
from .problem import SdpProblem, Term


def _field(*mats) -> bool:
    return any(np.iscomplexobj(M) and np.any(np.abs(np.imag(M)) > 0) for M in mats)


def _data(M):
    M = hermitian(_matrix(M))
    return M


def _ball(p: SdpProblem, rho, eps: float, cplx: bool):
    """Add ``rho_bar`` in the smoothing ball around ``rho``.

    The trace-norm condition ``rho_bar - rho = P - N``, ``Tr(P + N) <= eps``
    is imposed with ``N = P - rho_bar + rho`` eliminated into a PSD block.
    """
    d = rho.shape[0]
    I = np.eye(d)
    tr = float(np.trace(rho).real)
    rb = p.variable(d, cplx, "rho_bar")
    P = p.variable(d, cplx, "P")
    p.add_psd([Term(rb)], name="rho_bar>=0")
    p.add_psd([Term(P)], name="P>=0")
    p.add_psd([Term(P), Term(rb, -1.0)], const=rho, name="N>=0")
    p.add_le([(rb, I)], tr, name="Tr rho_bar<=Tr rho")
    p.add_le([(P, 2 * I), (rb, -I)], float(eps) - tr, name="Tr(P+N)<=eps")
    return rb, P


def build_emax_sdp(rho, dims=None) -> SdpProblem:
    """``min Tr X`` s.t. ``X >= rho`` and ``X^Gamma >= 0`` (variable ``X``)."""
    dims = _dims_of(rho, dims)
    R = _data(rho)
    cplx = _field(R)
    p = SdpProblem()
    X = p.variable(dims.d, cplx, "X")
    p.minimize([(X, np.eye(dims.d))])
    p.add_psd([Term(X)], const=-R, name="X-rho>=0")
    p.add_psd([Term(X, op="pt", dims=dims.as_tuple())], name="X^G>=0")
    return p


def build_lmo_sdp(G, dims) -> SdpProblem:
    """``min Tr(G sigma)`` over PPT states (variable ``sigma``)."""
    dims = Dims.of(dims)
    G = _data(G)
    p = SdpProblem()
    s = p.variable(dims.d, _field(G), "sigma")
    p.minimize([(s, G)])
    p.add_psd([Term(s)], name="sigma>=0")
    p.add_psd([Term(s, op="pt", dims=dims.as_tuple())], name="sigma^G>=0")
    p.add_eq([(s, np.eye(dims.d))], 1.0, name="Tr sigma=1")
    return p


def build_emin_sdp(pi, dims) -> SdpProblem:
    """``min -Tr(pi sigma)`` over PPT states; the optimal overlap is ``-primal``."""
    Pm = _data(pi)
    if np.max(np.abs(Pm @ Pm - Pm)) > 1e-9:
        raise ValueError("pi is not a projector")
    return build_lmo_sdp(-Pm, dims)


def build_smooth_emax_sdp(rho, eps: float, dims=None) -> SdpProblem:
    """``min Tr X`` s.t. ``X >= rho_bar``, ``X^Gamma >= 0``, ``rho_bar`` in the ball."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    dims = _dims_of(rho, dims)
    R = _data(rho)
    cplx = _field(R)
    p = SdpProblem()
    X = p.variable(dims.d, cplx, "X")
    p.minimize([(X, np.eye(dims.d))])
    rb, _ = _ball(p, R, eps, cplx)
    p.add_psd([Term(X), Term(rb, -1.0)], name="X-rho_bar>=0")
    p.add_psd([Term(X, op="pt", dims=dims.as_tuple())], name="X^G>=0")
    return p


def build_smooth_dmax_sdp(rho, sigma, eps: float) -> SdpProblem:
    """``min t`` s.t. ``rho_bar <= t sigma`` with ``rho_bar`` in the ball."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    R = _data(rho)
    S = _data(sigma)
    cplx = _field(R, S)
    p = SdpProblem()
    t = p.scalar("t")
    p.minimize([(t, np.ones((1, 1)))])
    rb, _ = _ball(p, R, eps, cplx)
    p.add_psd([Term(t, op="scale", matrix=S), Term(rb, -1.0)], name="t*sigma-rho_bar>=0")
    return p
