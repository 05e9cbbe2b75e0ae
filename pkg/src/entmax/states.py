"""Seeded test-state and random-channel generators."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .linalg import BipartiteState, Dims, partial_trace

FAMILIES = ("haar_pure", "ginibre_mixed", "isotropic", "product_mixture", "mes")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_vector(d: int, rng) -> np.ndarray:
    rng = _rng(rng)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def haar_unitary(d: int, rng) -> np.ndarray:
    rng = _rng(rng)
    Z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def haar_isometry(d_in: int, d_out: int, rng) -> np.ndarray:
    """``d_out x d_in`` matrix with orthonormal columns."""
    if d_out < d_in:
        raise DimensionError("isometry needs d_out >= d_in")
    return haar_unitary(d_out, rng)[:, :d_in]


def mes_vector(M: int, dims) -> np.ndarray:
    """``|Psi_M> = M^{-1/2} sum_{i<M} |i>|i>`` embedded in ``dA x dB``."""
    dims = Dims.of(dims)
    if M < 1 or M > min(dims.dA, dims.dB):
        raise DimensionError(f"MES rank {M} incompatible with dims {dims.as_tuple()}")
    v = np.zeros(dims.d)
    for i in range(M):
        v[i * dims.dB + i] = 1.0
    return v / np.sqrt(M)


def mes(M: int, dims=None) -> BipartiteState:
    dims = Dims(M, M) if dims is None else Dims.of(dims)
    return BipartiteState.from_vector(mes_vector(M, dims), dims)


def isotropic(q: float, d: int = 2) -> BipartiteState:
    """``q Psi_d + (1 - q) I / d^2``."""
    if not 0 <= q <= 1:
        raise ValueError(f"isotropic weight q must lie in [0, 1], got {q!r}")
    dims = Dims(d, d)
    v = mes_vector(d, dims)
    return BipartiteState(q * np.outer(v, v) + (1 - q) * np.eye(d * d) / d**2, dims)


def pure_state(coeffs, dims=None) -> BipartiteState:
    """``sum_i c_i |ii>`` for given (real) Schmidt coefficients."""
    c = np.asarray(coeffs, dtype=float)
    dims = Dims(len(c), len(c)) if dims is None else Dims.of(dims)
    v = np.zeros(dims.d)
    for i, ci in enumerate(c):
        v[i * dims.dB + i] = ci
    return BipartiteState.from_vector(v / np.linalg.norm(v), dims)


def haar_pure(dims, rng) -> BipartiteState:
    dims = Dims.of(dims)
    return BipartiteState.from_vector(haar_vector(dims.d, rng), dims)


def ginibre_mixed(dims, rng, rank: int | None = None) -> BipartiteState:
    """Trace out a Haar-random environment of dimension ``rank`` (default d)."""
    dims = Dims.of(dims)
    k = dims.d if rank is None else rank
    psi = haar_vector(dims.d * k, rng)
    rho = partial_trace(np.outer(psi, psi.conj()), Dims(dims.d, k), keep="A")
    rho = (rho + rho.conj().T) / 2
    return BipartiteState(rho / np.trace(rho).real, dims)


def product_mixture(dims, k: int, rng) -> BipartiteState:
    """Random convex mixture of ``k`` Haar product pure states (separable)."""
    dims = Dims.of(dims)
    if k < 1:
        raise ValueError("product_mixture needs k >= 1")
    rng = _rng(rng)
    p = rng.dirichlet(np.ones(k))
    rho = np.zeros((dims.d, dims.d), dtype=complex)
    for pi in p:
        v = np.kron(haar_vector(dims.dA, rng), haar_vector(dims.dB, rng))
        rho += pi * np.outer(v, v.conj())
    return BipartiteState((rho + rho.conj().T) / 2, dims)


def state_factory(family: str, dims=(2, 2), seed=None, **params) -> BipartiteState:
    """Build a state of the named family.

    ``isotropic`` takes ``q``; ``product_mixture`` takes ``k`` (default 4);
    ``mes`` takes ``M`` (default ``min(dA, dB)``).
    """
    dims = Dims.of(dims)
    if family == "haar_pure":
        return haar_pure(dims, _rng(seed))
    if family == "ginibre_mixed":
        return ginibre_mixed(dims, _rng(seed), params.get("rank"))
    if family == "isotropic":
        if dims.dA != dims.dB:
            raise DimensionError("isotropic states need dA == dB")
        return isotropic(params.get("q", 0.0), dims.dA)
    if family == "product_mixture":
        return product_mixture(dims, int(params.get("k", 4)), _rng(seed))
    if family == "mes":
        M = int(params.get("M", min(dims.dA, dims.dB)))
        return mes(M, dims)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def random_channel_kraus(d_in: int, d_out: int, rng, d_env: int | None = None):
    """Kraus operators of ``rho -> Tr_E(V rho V^dag)`` for a Haar isometry ``V``."""
    d_env = d_in * d_out if d_env is None else d_env
    V = haar_isometry(d_in, d_out * d_env, rng)
    V = V.reshape(d_out, d_env, d_in)
    return [V[:, e, :] for e in range(d_env)]


def apply_kraus(kraus, rho) -> np.ndarray:
    out = sum(K @ rho @ K.conj().T for K in kraus)
    return (out + out.conj().T) / 2


def local_kraus(kraus_A, dB: int):
    I = np.eye(dB)
    return [np.kron(K, I) for K in kraus_A]
