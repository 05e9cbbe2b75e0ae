"""Dense Hermitian linear algebra on bipartite systems.

Operators are plain :class:`numpy.ndarray` objects.  Bipartite structure is
carried by :class:`Dims`; :class:`BipartiteState` and
:class:`SubnormalizedOperator` bundle a validated matrix with its dims.

Index convention: the composite basis is ``|a>|b>`` with ``a`` the row-major
(slow) index, i.e. ``kron(M_A, M_B)`` acts as ``M_A`` on subsystem A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .errors import ConvergenceError, DimensionError, InvalidOperatorError


@dataclass(frozen=True)
class Dims:
    dA: int
    dB: int

    def __post_init__(self):
        for name in ("dA", "dB"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DimensionError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def d(self) -> int:
        return self.dA * self.dB

    def as_tuple(self):
        return (self.dA, self.dB)

    @classmethod
    def of(cls, dims) -> "Dims":
        if isinstance(dims, Dims):
            return dims
        dA, dB = dims
        return cls(dA, dB)


def _matrix(op) -> np.ndarray:
    return op.matrix if hasattr(op, "matrix") else np.asarray(op)


def _dims_of(op, dims=None) -> Dims:
    if dims is not None:
        return Dims.of(dims)
    if hasattr(op, "dims"):
        return op.dims
    raise DimensionError("bipartite dims required for a bare matrix")


def hermitian(M, tol: float = config.HERMITICITY_TOL) -> np.ndarray:
    """Validate ``M`` as Hermitian (max-entry tolerance) and return its symmetrization."""
    M = np.asarray(_matrix(M))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    dev = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if dev > tol:
        raise InvalidOperatorError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    H = (M + M.conj().T) / 2
    if np.isrealobj(M):
        return H.astype(float)
    return H.astype(complex)


@dataclass(frozen=True, eq=False)
class SubnormalizedOperator:
    """Positive operator with trace at most one on a bipartite space."""

    matrix: np.ndarray
    dims: Dims

    def __post_init__(self):
        dims = Dims.of(self.dims)
        object.__setattr__(self, "dims", dims)
        M = hermitian(self.matrix)
        if M.shape[0] != dims.d:
            raise DimensionError(f"matrix side {M.shape[0]} does not match dims {dims.as_tuple()}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        self._check()

    def _check(self):
        tol = config.tol()
        wmin = np.linalg.eigvalsh(self.matrix)[0]
        if wmin < -tol:
            raise InvalidOperatorError(f"operator is not positive (min eigenvalue {wmin:.3e})")
        tr = self.trace
        if tr > 1 + tol:
            raise InvalidOperatorError(f"trace {tr!r} exceeds one")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def d(self) -> int:
        return self.dims.d


class BipartiteState(SubnormalizedOperator):
    """Density operator (positive, unit trace) on ``H_A (x) H_B``."""

    def _check(self):
        super()._check()
        if abs(self.trace - 1) > config.tol():
            raise InvalidOperatorError(f"state trace {self.trace!r} differs from one")

    @classmethod
    def from_vector(cls, psi, dims) -> "BipartiteState":
        psi = np.asarray(psi).reshape(-1)
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1) > 1e-10:
            raise InvalidOperatorError(f"state vector has norm {nrm!r}")
        return cls(np.outer(psi, psi.conj()), dims)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coefficients > 1e-12))

    def vector(self) -> np.ndarray:
        return np.einsum("i,ai,bi->ab", self.coefficients, self.left, self.right).reshape(-1)


def eig_hermitian(M):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises :class:`ConvergenceError` if LAPACK fails or the reconstruction
    residual exceeds ``1e-9 * max|M|``.
    """
    H = hermitian(M)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigh failed: {exc}") from exc
    scale = np.max(np.abs(H)) if H.size else 0.0
    resid = np.max(np.abs((V * w) @ V.conj().T - H)) if H.size else 0.0
    if resid > 1e-9 * max(scale, np.finfo(float).tiny):
        raise ConvergenceError("eigendecomposition residual too large", residual=resid)
    return w, V


def funcm(M, f) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix spectrally."""
    w, V = np.linalg.eigh(M)
    return (V * f(w)) @ V.conj().T


def psd_sqrt(M) -> np.ndarray:
    return funcm(M, lambda w: np.sqrt(np.clip(w, 0, None)))


def psd_inv_sqrt(M, tol: float | None = None) -> np.ndarray:
    """Pseudo-inverse square root: eigenvalues at most ``tol`` map to zero."""
    tol = config.tol() if tol is None else tol

    def f(w):
        out = np.zeros_like(w)
        keep = w > tol
        out[keep] = 1 / np.sqrt(w[keep])
        return out

    return funcm(M, f)


def clip_psd(M) -> np.ndarray:
    return funcm(hermitian(M, tol=np.inf), lambda w: np.clip(w, 0, None))


def min_eig(M) -> float:
    return float(np.linalg.eigvalsh(hermitian(M, tol=np.inf))[0])


def support_projector(M, tol: float | None = None) -> np.ndarray:
    tol = config.tol() if tol is None else tol
    w, V = np.linalg.eigh(hermitian(M))
    P = V[:, w > tol]
    return P @ P.conj().T


def partial_trace(rho, dims=None, keep: str = "A") -> np.ndarray:
    """Reduced operator on subsystem ``keep`` ('A' or 'B')."""
    M = np.asarray(_matrix(rho))
    dims = _dims_of(rho, dims)
    if M.shape != (dims.d, dims.d):
        raise DimensionError(f"shape {M.shape} inconsistent with dims {dims.as_tuple()}")
    T = M.reshape(dims.dA, dims.dB, dims.dA, dims.dB)
    if keep == "A":
        return np.einsum("ijkj->ik", T)
    if keep == "B":
        return np.einsum("ijil->jl", T)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_transpose(M, dims=None) -> np.ndarray:
    """Transpose on subsystem A.  Exact involution (pure index permutation)."""
    X = np.asarray(_matrix(M))
    dims = _dims_of(M, dims)
    if X.shape != (dims.d, dims.d):
        raise DimensionError(f"shape {X.shape} inconsistent with dims {dims.as_tuple()}")
    a, b = dims.dA, dims.dB
    return X.reshape(a, b, a, b).transpose(2, 1, 0, 3).reshape(a * b, a * b)


def is_ppt(rho, dims=None, tol: float | None = None) -> bool:
    tol = config.tol() if tol is None else tol
    return min_eig(partial_transpose(rho, dims)) >= -tol


def trace_norm(M) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian(M)))))


def trace_distance_split(A, B) -> float:
    """``Tr[{A>=B}(A-B)] - Tr[{A<B}(A-B)]`` via the two spectral projectors."""
    D = hermitian(np.asarray(_matrix(A)) - np.asarray(_matrix(B)))
    P = positive_part_projector(D, np.zeros_like(D), strict=False, tol=0.0)
    Pc = np.eye(D.shape[0]) - P
    return float(np.trace(P @ D).real - np.trace(Pc @ D).real)


def _psd_factor(M):
    """``A`` with ``M = A A^dag``; eigenvalues at rounding level are dropped."""
    w, V = np.linalg.eigh(M)
    cut = M.shape[0] * np.finfo(float).eps * max(w[-1], 0.0)
    keep = w > cut
    return V[:, keep] * np.sqrt(w[keep])


def fidelity(rho, sigma) -> float:
    """``Tr sqrt(rho^1/2 sigma rho^1/2)``, computed as ``||A^dag B||_1`` for
    factors ``rho = A A^dag`` and ``sigma = B B^dag``."""
    R = hermitian(rho)
    S = hermitian(sigma)
    if R.shape != S.shape:
        raise DimensionError("fidelity of operators with different shapes")
    C = _psd_factor(R).conj().T @ _psd_factor(S)
    if C.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(C, compute_uv=False)))


def positive_part_projector(A, B, strict: bool = True, tol: float | None = None) -> np.ndarray:
    """Projector onto the eigenspaces of ``A - B`` with eigenvalue ``> tol``
    (strict) or ``>= -tol`` (non-strict)."""
    tol = config.tol() if tol is None else tol
    D = hermitian(np.asarray(_matrix(A)) - np.asarray(_matrix(B)))
    w, V = np.linalg.eigh(D)
    keep = w > tol if strict else w >= -tol
    P = V[:, keep]
    return P @ P.conj().T


def schmidt_decompose(psi, dims) -> SchmidtDecomposition:
    """Schmidt form ``psi = sum_i c_i |l_i>|r_i>`` with ``c`` descending."""
    dims = Dims.of(dims)
    v = np.asarray(psi).reshape(-1)
    if v.size != dims.d:
        raise DimensionError(f"vector length {v.size} does not match dims {dims.as_tuple()}")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1) > 1e-10:
        raise InvalidOperatorError(f"state vector has norm {nrm!r}")
    U, c, Vh = np.linalg.svd(v.reshape(dims.dA, dims.dB), full_matrices=False)
    return SchmidtDecomposition(c, U, Vh.T)


def _regroup(K, dA1, dB1, dA2, dB2):
    # A1 B1 A2 B2 -> A1 A2 B1 B2 on both row and column indices
    shape = (dA1, dB1, dA2, dB2)
    T = K.reshape(shape + shape).transpose(0, 2, 1, 3, 4, 6, 5, 7)
    d = dA1 * dB1 * dA2 * dB2
    return T.reshape(d, d)


def tensor(M, N, dimsM=None, dimsN=None):
    """Tensor product regrouped as ``(A A')|(B B')``.

    Composite A index is ``a * dA' + a'`` and B index ``b * dB' + b'``.
    Returns ``(matrix, Dims)``.
    """
    dm = _dims_of(M, dimsM)
    dn = _dims_of(N, dimsN)
    X = np.asarray(_matrix(M))
    Y = np.asarray(_matrix(N))
    if X.shape != (dm.d, dm.d) or Y.shape != (dn.d, dn.d):
        raise DimensionError("operator shapes inconsistent with dims")
    if dm.d * dn.d > config.MAX_DIM:
        raise DimensionError(f"tensor dimension {dm.d * dn.d} exceeds {config.MAX_DIM}")
    K = _regroup(np.kron(X, Y), dm.dA, dm.dB, dn.dA, dn.dB)
    return K, Dims(dm.dA * dn.dA, dm.dB * dn.dB)


def tensor_power(M, n: int, dims=None):
    """``M^{(x)n}`` with all A factors first.  Returns ``(matrix, Dims)``."""
    dims = _dims_of(M, dims)
    if n < 1:
        raise ValueError("n must be >= 1")
    if dims.d ** n > config.MAX_DIM:
        raise DimensionError(f"tensor dimension {dims.d ** n} exceeds {config.MAX_DIM}")
    X = np.asarray(_matrix(M))
    out, od = X, dims
    for _ in range(n - 1):
        out, od = tensor(out, X, od, dims)
    return out, od


def gentle_measurement_check(rho, effect):
    """Post-measurement operator and both sides of the gentle-measurement bound.

    Returns ``(sqrt(L) rho sqrt(L), ||rho - sqrt(L) rho sqrt(L)||_1, 2 sqrt(delta))``
    with ``delta = 1 - Tr(rho L)``; ``rho`` may be subnormalized.
    """
    R = hermitian(rho)
    L = hermitian(effect)
    if R.shape != L.shape:
        raise DimensionError("state and effect have different shapes")
    w = np.linalg.eigvalsh(L)
    if w[0] < -config.HERMITICITY_TOL or w[-1] > 1 + config.HERMITICITY_TOL:
        raise InvalidOperatorError(f"effect spectrum [{w[0]:.3e}, {w[-1]:.3e}] outside [0, 1]")
    sL = psd_sqrt(L)
    post = sL @ R @ sL
    post = (post + post.conj().T) / 2
    delta = max(1.0 - np.trace(R @ L).real, 0.0)
    lhs = trace_norm(R - post)
    rhs = 2 * np.sqrt(delta)
    if lhs > rhs + 1e-9:
        raise AssertionError(f"gentle measurement bound violated: {lhs} > {rhs}")
    return post, lhs, rhs
