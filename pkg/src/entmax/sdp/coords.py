"""Orthonormal real coordinates for real-symmetric and complex-Hermitian matrices.

Coordinate layout for an ``n x n`` block (``m = n(n-1)/2`` upper pairs ``i<j``
in row-major order)::

    [ M_ii (n) | sqrt2 Re M_ij (m) | sqrt2 Im M_ij (m, complex only) ]

The basis is orthonormal for ``<A, B> = Re Tr(A B)``, so ``Tr(F X)`` for
Hermitian ``F`` is the dot product ``svec(F) . svec(X)``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SQRT2 = np.sqrt(2.0)


class Basis:
    def __init__(self, n: int, cplx: bool):
        self.n = int(n)
        self.cplx = bool(cplx)
        self.iu = np.triu_indices(self.n, 1)
        self.m = len(self.iu[0])
        self.N = self.n + self.m * (2 if self.cplx else 1)
        self.dtype = complex if self.cplx else float

    def svec(self, M) -> np.ndarray:
        """Coordinates of a Hermitian matrix or a stack ``(..., n, n)`` of them."""
        M = np.asarray(M)
        d = np.real(np.diagonal(M, axis1=-2, axis2=-1))
        off = M[..., self.iu[0], self.iu[1]]
        parts = [d, SQRT2 * np.real(off)]
        if self.cplx:
            parts.append(SQRT2 * np.imag(off))
        return np.concatenate(parts, axis=-1)

    def smat(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        n, m = self.n, self.m
        M = np.zeros((n, n), dtype=self.dtype)
        M[np.arange(n), np.arange(n)] = v[:n]
        off = v[n:n + m] / SQRT2
        if self.cplx:
            off = off + 1j * v[n + m:] / SQRT2
        M[self.iu] = off
        M[self.iu[1], self.iu[0]] = np.conj(off)
        return M

    @property
    def eye(self) -> np.ndarray:
        v = np.zeros(self.N)
        v[: self.n] = 1.0
        return v

    def entries(self):
        """Each basis element as two weighted matrix units ``(p, q, alpha)``."""
        n, m = self.n, self.m
        i, j = self.iu
        p = [np.arange(n), i]
        q = [np.arange(n), j]
        a = [np.ones(n), np.full(m, 1 / SQRT2)]
        p2 = [np.zeros(n, int), j]
        q2 = [np.zeros(n, int), i]
        a2 = [np.zeros(n), np.full(m, 1 / SQRT2)]
        if self.cplx:
            p += [i]
            q += [j]
            a += [np.full(m, 1j / SQRT2)]
            p2 += [j]
            q2 += [i]
            a2 += [np.full(m, -1j / SQRT2)]
        cat = np.concatenate
        return (
            (cat(p), cat(q), cat(a).astype(self.dtype)),
            (cat(p2), cat(q2), cat(a2).astype(self.dtype)),
        )


@lru_cache(maxsize=64)
def basis(n: int, cplx: bool) -> Basis:
    return Basis(n, cplx)


@lru_cache(maxsize=64)
def pt_signed_perm(n: int, dA: int, dB: int, cplx: bool):
    """``(perm, sign)`` with ``svec(PT(smat(u))) == sign * u[perm]``.

    The partial transpose on A maps matrix units to matrix units, so in these
    coordinates it is a signed permutation (an involution).
    """
    if dA * dB != n:
        raise ValueError("dims do not match block size")
    B = basis(n, cplx)
    i, j = B.iu
    lookup = -np.ones((n, n), dtype=int)
    lookup[i, j] = np.arange(B.m)
    ai, bi = np.divmod(i, dB)
    aj, bj = np.divmod(j, dB)
    ip = aj * dB + bi
    jp = ai * dB + bj
    lo = np.minimum(ip, jp)
    hi = np.maximum(ip, jp)
    k = lookup[lo, hi]
    perm = [np.arange(n), n + k]
    sign = [np.ones(n), np.ones(B.m)]
    if cplx:
        perm.append(n + B.m + k)
        sign.append(np.where(ip < jp, 1.0, -1.0))
    perm = np.concatenate(perm)
    sign = np.concatenate(sign)
    return perm, sign


def quad_form(B: Basis, Q: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Matrix ``K[a, b] = Re Tr(E_a Q E_b Q)`` of ``U -> Q U Q`` in these coordinates."""
    (p1, q1, a1), (p2, q2, a2) = B.entries()
    N = B.N
    K = np.empty((N, N))
    ent = ((p1, q1, a1), (p2, q2, a2))
    for start in range(0, N, chunk):
        sl = slice(start, min(start + chunk, N))
        acc = np.zeros((sl.stop - sl.start, N), dtype=np.result_type(Q.dtype, B.dtype))
        for pa, qa, aa in ent:
            pa, qa, aa = pa[sl], qa[sl], aa[sl]
            for pb, qb, ab in ent:
                acc += (aa[:, None] * ab[None, :]) * Q[qa[:, None], pb[None, :]] * Q[qb[None, :], pa[:, None]]
        K[sl] = np.real(acc)
    return K
