"""One-shot perfect entanglement dilution from the global robustness.

For a target ``rho`` with robustness ``s`` and optimal decomposition
``rho + s pi = (1 + s) sigma*``, the measure-and-prepare channel

    Lambda_M(omega) = Tr(Psi_M omega) rho + (1 - Tr(Psi_M omega)) pi

maps the rank-``M`` maximally entangled state to ``rho`` exactly and sends
separable inputs (overlap at most ``1/M <= 1/(1+s)``) to states of
robustness at most ``1/s``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import BipartiteState, Dims, _matrix, hermitian, min_eig, partial_transpose, trace_norm
from .measures import ROBUSTNESS_FLOOR, _state, global_robustness
from .states import _rng, haar_vector, mes_vector

#: ``1 + s`` within this distance of an integer is treated as that integer.
INTEGRAL_SNAP = 1e-7

ROBUSTNESS_SLACK = 1e-6
OVERLAP_SLACK = 1e-9
MAX_PRODUCT_TERMS = 10


@dataclass(frozen=True, eq=False)
class DilutionPlan:
    """Data of the channel ``Lambda_M`` for one target state.

    ``overhead = log2(M / (1 + s))`` is the rate lost to rounding ``1 + s``
    up to an integer MES rank.
    """

    target: BipartiteState
    s: float
    M: int
    noise_state: BipartiteState
    sigma_star: BipartiteState
    rate: float
    overhead: float

    @property
    def vacuous(self) -> bool:
        return self.s <= ROBUSTNESS_FLOOR


def _rank(one_plus_s: float) -> int:
    r = round(one_plus_s)
    if abs(one_plus_s - r) <= INTEGRAL_SNAP:
        return max(int(r), 1)
    return int(math.ceil(one_plus_s))


def _as_state(M, dims) -> BipartiteState:
    M = hermitian(M, tol=np.inf)
    M = M / np.trace(M).real
    w, V = np.linalg.eigh(M)
    if w[0] < 0:
        M = (V * np.clip(w, 0, None)) @ V.conj().T
        M = M / np.trace(M).real
    return BipartiteState(M, dims)


def make_plan(rho, dims=None) -> DilutionPlan:
    """Plan with ``M = ceil(1 + s)`` and the certificates of the robustness SDP."""
    rho = _state(rho, dims)
    r = global_robustness(rho)
    s = max(float(r.value), 0.0)
    d = rho.dims.d
    if s <= ROBUSTNESS_FLOOR:
        mixed = BipartiteState(np.eye(d) / d, rho.dims)
        return DilutionPlan(rho, 0.0, 1, mixed, _as_state(rho.matrix, rho.dims), 0.0, 0.0)
    M = _rank(1 + s)
    pi = _as_state(r.certificates["pi"], rho.dims)
    sigma = _as_state(r.certificates["sigma"], rho.dims)
    return DilutionPlan(rho, s, M, pi, sigma, float(np.log2(M)), float(np.log2(M / (1 + s))))


def mes_overlap(plan: DilutionPlan, omega) -> float:
    W = _matrix(omega)
    v = mes_vector(plan.M, Dims(plan.M, plan.M))
    return float(np.real(v.conj() @ W @ v))


def apply_channel(plan: DilutionPlan, omega) -> BipartiteState:
    """``Lambda_M(omega)`` for ``omega`` on ``M x M``."""
    W = _matrix(omega)
    if W.shape != (plan.M**2, plan.M**2):
        raise DimensionError(f"input must act on {plan.M}x{plan.M}, got shape {W.shape}")
    dims = getattr(omega, "dims", None)
    if dims is not None and Dims.of(dims) != Dims(plan.M, plan.M):
        raise DimensionError(f"input dims {Dims.of(dims).as_tuple()} differ from ({plan.M}, {plan.M})")
    p = mes_overlap(plan, W)
    out = p * plan.target.matrix + (1 - p) * plan.noise_state.matrix
    return BipartiteState(out, plan.target.dims)


def decomposition_residual(plan: DilutionPlan) -> float:
    """Max-entry residual of ``rho + s pi = (1 + s) sigma*``."""
    lhs = plan.target.matrix + plan.s * plan.noise_state.matrix
    return float(np.max(np.abs(lhs - (1 + plan.s) * plan.sigma_star.matrix)))


def perfect_output_residual(plan: DilutionPlan) -> float:
    """``|| Lambda_M(Psi_M) - rho ||_1``."""
    psi = BipartiteState.from_vector(mes_vector(plan.M, Dims(plan.M, plan.M)), Dims(plan.M, plan.M))
    return trace_norm(apply_channel(plan, psi).matrix - plan.target.matrix)


def random_separable(M: int, rng, max_terms: int = MAX_PRODUCT_TERMS) -> BipartiteState:
    """Mixture of ``k <= max_terms`` Haar product pure states on ``M x M``."""
    rng = _rng(rng)
    k = int(rng.integers(1, max_terms + 1))
    p = rng.dirichlet(np.ones(k))
    W = np.zeros((M * M, M * M), dtype=complex)
    for pk in p:
        v = np.kron(haar_vector(M, rng), haar_vector(M, rng))
        W += pk * np.outer(v, v.conj())
    return BipartiteState((W + W.conj().T) / 2, Dims(M, M))


def sepp_audit(plan: DilutionPlan, samples: int = 100, seed=0, jobs: int = 1) -> dict:
    """Check the ``1/s``-SEPP property of ``Lambda_M`` on sampled separable inputs.

    Returns a JSON-ready report with per-sample robustness and overlap, the
    worst slacks, and the witness of the first failing sample (if any).
    The audit is skipped when the plan is vacuous.
    """
    if plan.vacuous:
        return {"skipped": True, "reason": "target is not entangled (s = 0)", "pass": True,
                "samples": 0, "bound": None, "maxOverlap": None, "rows": []}
    rng = np.random.default_rng(seed)
    inputs = [random_separable(plan.M, rng) for _ in range(samples)]
    bound = 1.0 / plan.s

    def one(W):
        p = mes_overlap(plan, W)
        out = apply_channel(plan, W)
        rg = float(global_robustness(out).value)
        return {"robustness": rg, "overlap": p}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(one, inputs))
    else:
        rows = [one(W) for W in inputs]
    witness = None
    for i, (row, W) in enumerate(zip(rows, inputs)):
        row["index"] = i
        row["pass"] = bool(row["robustness"] <= bound + ROBUSTNESS_SLACK
                           and row["overlap"] <= 1.0 / plan.M + OVERLAP_SLACK)
        if not row["pass"] and witness is None:
            witness = {"index": i, "matrix": W.matrix}
    max_overlap = max(r["overlap"] for r in rows) if rows else 0.0
    max_rg = max(r["robustness"] for r in rows) if rows else 0.0
    return {
        "skipped": False,
        "samples": samples,
        "seed": seed,
        "M": plan.M,
        "s": plan.s,
        "bound": bound,
        "maxRobustness": max_rg,
        "robustnessSlack": bound - max_rg,
        "maxOverlap": max_overlap,
        "overlapSlack": 1.0 / plan.M - max_overlap,
        "pass": witness is None,
        "witness": witness,
        "rows": rows,
    }


def plan_checks(plan: DilutionPlan) -> dict:
    """Residuals of the plan invariants."""
    out = {"perfectOutput": perfect_output_residual(plan),
           "sigmaPPT": min_eig(partial_transpose(plan.sigma_star.matrix, plan.target.dims))}
    if not plan.vacuous:
        out["decomposition"] = decomposition_residual(plan)
    return out
