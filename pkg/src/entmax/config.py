"""Global numerical tolerance shared by every module.

The eigenvalue cut-off decides PSD membership, support projectors and
positive-part projectors.  It is read once from ``ENTMAX_TOL`` and can be
overridden at runtime with :func:`set_tol` or the :func:`tolerance` context.
"""

from __future__ import annotations

import contextlib
import os

DEFAULT_TOL = 1e-10

#: Tolerance for Hermiticity checks on user-supplied operators.
HERMITICITY_TOL = 1e-10

#: Largest total dimension accepted by tensor products and n-copy probes.
MAX_DIM = 4096


def _from_env() -> float:
    raw = os.environ.get("ENTMAX_TOL")
    if raw is None or raw.strip() == "":
        return DEFAULT_TOL
    value = float(raw)
    if not value > 0:
        raise ValueError(f"ENTMAX_TOL must be positive, got {raw!r}")
    return value


_tol = _from_env()


def tol() -> float:
    """Current eigenvalue tolerance."""
    return _tol


def set_tol(value: float) -> None:
    global _tol
    if not value > 0:
        raise ValueError("tolerance must be positive")
    _tol = float(value)


@contextlib.contextmanager
def tolerance(value: float):
    """Temporarily replace the eigenvalue tolerance."""
    old = _tol
    set_tol(value)
    try:
        yield
    finally:
        set_tol(old)
