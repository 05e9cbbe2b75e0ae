"""Seeded invariant suites shared by the self-test command and the test suite.

Each suite takes a generator and a sample count and returns a
:class:`SuiteOutcome`.  ``worst_slack`` is the smallest margin observed
(negative means violated) and ``threshold`` the slack the suite tolerates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dilution, smoothing
from .divergences import d_max
from .errors import EntmaxError
from .linalg import BipartiteState, Dims, fidelity, gentle_measurement_check, tensor, trace_norm
from .measures import e_max, e_min, e_r, global_robustness, log_negativity, pure_state_closed_forms
from .states import (
    apply_kraus,
    ginibre_mixed,
    haar_pure,
    haar_unitary,
    isotropic,
    local_kraus,
    mes,
    product_mixture,
    pure_state,
    random_channel_kraus,
)

QUBITS = Dims(2, 2)


@dataclass
class SuiteOutcome:
    id: str
    samples: int
    worst_slack: float
    threshold: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.worst_slack >= self.threshold)

    def as_dict(self) -> dict:
        return {"id": self.id, "samples": self.samples, "worstSlack": self.worst_slack,
                "threshold": self.threshold, "pass": self.passed, "details": self.details}


def _worst(values) -> float:
    values = list(values)
    return float(min(values)) if values else float("inf")


def _random_state(rng, dims=QUBITS):
    """Ginibre state of random rank; rank one gives a pure state."""
    return ginibre_mixed(dims, rng, rank=int(rng.integers(1, dims.d + 1)))


def _pure_vector(rho):
    return np.linalg.eigh(rho.matrix)[1][:, -1]


# -- measures -------------------------------------------------------------------


def mes_values(rng=None, n=3) -> SuiteOutcome:
    """``E_max(Psi_M) = log2 M`` and ``R_g(Psi_M) = M - 1`` for ``M = 2..min(4, n + 1)``."""
    errs = []
    Ms = list(range(2, 2 + max(1, min(n, 3))))
    for M in Ms:
        s = global_robustness(mes(M)).value
        errs.append(max(abs(np.log2(1 + s) - np.log2(M)), abs(s - (M - 1))))
    return SuiteOutcome("mes_values", len(Ms), -max(errs), -1e-6, {"ranks": Ms})


def pure_closed_form(rng, n=50) -> SuiteOutcome:
    """SDP ``E_max`` and ``LN`` of pure states against ``2 log2 sum c``."""
    err = []
    for _ in range(n):
        rho = haar_pure(QUBITS, rng)
        cf = pure_state_closed_forms(_pure_vector(rho), QUBITS)
        err.append(max(abs(e_max(rho).value - cf["emax"]), abs(log_negativity(rho).value - cf["emax"])))
    return SuiteOutcome("pure_closed_form", n, -max(err), -1e-5)


def faithfulness(rng, n=50) -> SuiteOutcome:
    """``E_max <= 1e-6`` on random separable states."""
    vals = [e_max(product_mixture(QUBITS, int(rng.integers(1, 6)), rng)).value for _ in range(n)]
    return SuiteOutcome("faithfulness", n, -max(vals), -1e-6, {"maxValue": max(vals)})


def isotropic_threshold(rng=None, n=40) -> SuiteOutcome:
    """Bisection for the least ``q`` with ``E_max(isotropic(q)) > 0``."""
    lo, hi = 0.0, 1.0
    for _ in range(n):
        mid = (lo + hi) / 2
        if e_max(isotropic(mid)).value > 1e-9:
            hi = mid
        else:
            lo = mid
    q = (lo + hi) / 2
    return SuiteOutcome("isotropic_threshold", n, -abs(q - 1 / 3), -1e-3, {"q": q})


def ordering(rng, n=100, er_tol=1e-7) -> SuiteOutcome:
    """``E_min <= E_R <= E_max``."""
    slack = []
    for _ in range(n):
        rho = _random_state(rng)
        lo = e_min(rho).value
        mid = e_r(rho, tol=er_tol)
        hi = e_max(rho).value
        # the Frank-Wolfe value is an upper bound; value - gap is a lower bound
        slack.append(min(mid.value - mid.residuals.get("gap", 0.0) - lo, hi - mid.value))
    return SuiteOutcome("ordering", n, _worst(slack), -1e-6)


def quasiconvexity(rng, n=100) -> SuiteOutcome:
    """``E_max(p rho + (1 - p) sigma) <= max(E_max(rho), E_max(sigma))``."""
    slack = []
    for _ in range(n):
        a, b = _random_state(rng), _random_state(rng)
        p = rng.uniform()
        mix = BipartiteState(p * a.matrix + (1 - p) * b.matrix, QUBITS)
        slack.append(max(e_max(a).value, e_max(b).value) - e_max(mix).value)
    return SuiteOutcome("quasiconvexity", n, _worst(slack), -1e-6)


def subadditivity(rng, n=20) -> SuiteOutcome:
    """``E_max(rho (x) sigma) <= E_max(rho) + E_max(sigma)`` on 2 x 2 pairs."""
    slack = []
    for _ in range(n):
        a, b = _random_state(rng), _random_state(rng)
        M, dims = tensor(a, b)
        slack.append(e_max(a).value + e_max(b).value - e_max(M, dims).value)
    return SuiteOutcome("subadditivity", n, _worst(slack), -1e-4)


def mes_additivity(rng, n=20) -> SuiteOutcome:
    """``E_max(rho (x) Psi_2) = E_max(rho) + 1``."""
    dev = []
    phi = mes(2)
    for _ in range(n):
        a = _random_state(rng)
        M, dims = tensor(a, phi)
        dev.append(abs(e_max(M, dims).value - e_max(a).value - 1))
    return SuiteOutcome("mes_additivity", n, -max(dev), -1e-4)


def local_monotonicity(rng, n=50) -> SuiteOutcome:
    """``E_max`` does not increase under random local channels on A."""
    slack = []
    for _ in range(n):
        rho = _random_state(rng)
        K = local_kraus(random_channel_kraus(2, 2, rng), 2)
        out = BipartiteState(apply_kraus(K, rho.matrix), QUBITS)
        slack.append(e_max(rho).value - e_max(out).value)
    return SuiteOutcome("local_monotonicity", n, _worst(slack), -1e-6)


def dmax_monotonicity(rng, n=200) -> SuiteOutcome:
    """``D_max`` does not increase under random global channels."""
    slack = []
    for _ in range(n):
        rho, sigma = ginibre_mixed(QUBITS, rng), ginibre_mixed(QUBITS, rng)
        K = random_channel_kraus(4, 4, rng)
        before = d_max(rho, sigma).value
        after = d_max(apply_kraus(K, rho.matrix), apply_kraus(K, sigma.matrix)).value
        slack.append(before - after)
    return SuiteOutcome("dmax_monotonicity", n, _worst(slack), -1e-6)


# -- smoothing ------------------------------------------------------------------


def smoothing_construction(rng, n=100) -> SuiteOutcome:
    """Explicit smoothing on random ``(rho, sigma, lam)`` triples.

    ``lam`` is the constructive bound for a random ``eps`` in ``[0.05, 0.9]``.
    Checks the order bound, the trace-distance bound, ``(T + T^dag)/2 <= I``,
    the overlap defect, and that the exact smooth ``D_max`` at ``eps`` does
    not exceed ``lam``.  Every other sample enlarges ``delta`` by a random
    PSD term.
    """
    slack = {"order": [], "distance": [], "tbar": [], "overlap": [], "exact": []}
    for k in range(n):
        rho, sigma = _random_state(rng), ginibre_mixed(QUBITS, rng)
        eps = float(rng.uniform(0.05, 0.9))
        lam = smoothing.lambda_for_epsilon(rho, sigma, eps)
        plus, _ = smoothing.delta_split(rho, sigma, lam)
        if k % 2:
            G = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
            plus = plus + 0.05 * G @ G.conj().T
        rec = smoothing.lemma2_smooth(rho, sigma, lam, plus)
        slack["order"].append(rec.diagnostics["order_slack"] + 1e-9)
        slack["distance"].append(rec.epsilon - rec.diagnostics["distance"] + 1e-9)
        slack["tbar"].append(1 - rec.diagnostics["tbar_max"] + 1e-9)
        slack["overlap"].append(rec.delta_trace - rec.diagnostics["overlap_defect"] + 1e-9)
        slack["exact"].append(lam - smoothing.smooth_d_max(rho, sigma, eps) + 1e-7)
    worst = {k: _worst(v) for k, v in slack.items()}
    return SuiteOutcome("smoothing_construction", n, min(worst.values()), 0.0, worst)


EPS_GRID = (0.0, 0.01, 0.05, 0.1)


def smoothing_sanity(rng, n=10) -> SuiteOutcome:
    """``eps = 0`` consistency, monotonicity in ``eps``, smoothed subadditivity,
    and constructive bound above the exact value."""
    slack = {"zero": [], "monotone": [], "subadditive": [], "constructive": []}
    for _ in range(n):
        rho = _random_state(rng)
        vals = [smoothing.smooth_e_max(rho, e) for e in EPS_GRID]
        slack["zero"].append(1e-8 - abs(vals[0] - e_max(rho).value))
        slack["monotone"].append(min(a - b for a, b in zip(vals, vals[1:])) + 1e-6)
        M2, d2 = tensor(rho, rho)
        slack["subadditive"].append(2 * vals[1] - smoothing.smooth_e_max(M2, 2 * EPS_GRID[1], d2) + 1e-6)
        cons = [smoothing.constructive_smooth_e_max(rho, e) for e in EPS_GRID]
        slack["constructive"].append(min(c - v for c, v in zip(cons, vals)) + 1e-7)
    worst = {k: _worst(v) for k, v in slack.items()}
    return SuiteOutcome("smoothing_sanity", n, min(worst.values()), 0.0, worst)


TREND_COEFFS = (np.sqrt(0.9), np.sqrt(0.1))


def regularization_bounds(rng=None, n=2, eps=0.01) -> SuiteOutcome:
    """Per-copy smooth ``E_max`` of ``psi^{(x)k}``, ``k <= n``, lies in
    ``[E_R - 0.1, E_max + 1e-6]``; the spectral overlap at ``E_R + 0.1``
    decreases with ``k``."""
    psi = pure_state(TREND_COEFFS)
    probe = smoothing.regularization_probe(psi, eps, max_copies=n)
    emax = e_max(psi).value
    er = e_r(psi)
    upper = [emax + 1e-6 - v for _, v in probe.values_per_copy]
    lower = [v - (er.value - 0.1) for _, v in probe.values_per_copy]
    ov = [smoothing.spectral_overlap(psi, er.certificates["sigma"], k, er.value + 0.1) for k in range(1, n + 2)]
    dec = [a - b for a, b in zip(ov, ov[1:])]
    worst = {"upper": _worst(upper), "lower": _worst(lower), "overlapDecrease": _worst(dec)}
    details = dict(worst, values=[v for _, v in probe.values_per_copy], overlaps=ov)
    return SuiteOutcome("regularization_bounds", n, min(worst.values()), 0.0, details)


# -- dilution ---------------------------------------------------------------------


def dilution_targets(rng, n):
    out = [mes(2), isotropic(0.9), pure_state(TREND_COEFFS)]
    while len(out) < n:
        rho = _random_state(rng)
        if global_robustness(rho).value > 1e-3:
            out.append(rho)
    return out[:n]


def dilution_suite(rng, n=10, samples=100) -> SuiteOutcome:
    """Perfect output and ``1/s``-SEPP audit on ``n`` entangled targets."""
    perfect, rg_slack, ov_slack = [], [], []
    for rho in dilution_targets(rng, n):
        plan = dilution.make_plan(rho)
        perfect.append(1e-12 - dilution.perfect_output_residual(plan))
        audit = dilution.sepp_audit(plan, samples, seed=int(rng.integers(2**31)))
        if audit["skipped"]:
            # every target here is entangled, so a vacuous plan is a failure
            rg_slack.append(float("-inf"))
            continue
        rg_slack.append(audit["robustnessSlack"] + dilution.ROBUSTNESS_SLACK)
        ov_slack.append(audit["overlapSlack"] + dilution.OVERLAP_SLACK)
    worst = {"perfect": _worst(perfect), "robustness": _worst(rg_slack), "overlap": _worst(ov_slack)}
    return SuiteOutcome("dilution", n, min(worst.values()), 0.0, dict(worst, samplesPerTarget=samples))


# -- preliminaries ------------------------------------------------------------------


def fuchs_van_de_graaf(rng, n=500) -> SuiteOutcome:
    """``1 - F <= T <= sqrt(1 - F^2) <= sqrt(2 (1 - F))`` with ``T`` half the trace distance."""
    slack = []
    for _ in range(n):
        a, b = _random_state(rng), _random_state(rng)
        F = min(fidelity(a.matrix, b.matrix), 1.0)
        T = trace_norm(a.matrix - b.matrix) / 2
        mid = np.sqrt(max(1 - F * F, 0.0))
        slack.append(min(T - (1 - F), mid - T, np.sqrt(2 * (1 - F)) - mid))
    return SuiteOutcome("fuchs_van_de_graaf", n, _worst(slack), -1e-9)


def gentle_measurement(rng, n=500) -> SuiteOutcome:
    """``||rho - sqrt(L) rho sqrt(L)||_1 <= 2 sqrt(1 - Tr rho L)`` for random effects."""
    slack = []
    for _ in range(n):
        rho = _random_state(rng).matrix * rng.uniform(0.5, 1.0)
        U = haar_unitary(4, rng)
        w = rng.uniform(size=4) ** 0.25
        L = (U * w) @ U.conj().T
        _, lhs, rhs = gentle_measurement_check(rho, (L + L.conj().T) / 2)
        slack.append(rhs - lhs)
    return SuiteOutcome("gentle_measurement", n, _worst(slack), -1e-9)


#: ``(id, function, default sample count)`` in execution order.
SUITES = (
    ("mes_values", mes_values, 3),
    ("pure_closed_form", pure_closed_form, 50),
    ("faithfulness", faithfulness, 50),
    ("isotropic_threshold", isotropic_threshold, 40),
    ("ordering", ordering, 30),
    ("quasiconvexity", quasiconvexity, 100),
    ("subadditivity", subadditivity, 20),
    ("mes_additivity", mes_additivity, 20),
    ("local_monotonicity", local_monotonicity, 50),
    ("dmax_monotonicity", dmax_monotonicity, 200),
    ("smoothing_construction", smoothing_construction, 100),
    ("smoothing_sanity", smoothing_sanity, 10),
    ("regularization_bounds", regularization_bounds, 2),
    ("dilution", dilution_suite, 10),
    ("fuchs_van_de_graaf", fuchs_van_de_graaf, 500),
    ("gentle_measurement", gentle_measurement, 500),
)

#: Suites whose sample count is structural and not reduced by ``quick``.
FIXED_SIZE = {"mes_values", "isotropic_threshold", "regularization_bounds"}


def run_suites(seed: int = 0, quick: bool = False, only=None):
    """Run every suite with its own generator derived from ``seed``."""
    out = []
    seeds = np.random.SeedSequence(seed).spawn(len(SUITES))
    for (name, fn, n), ss in zip(SUITES, seeds):
        if only is not None and name not in only:
            continue
        if quick and name not in FIXED_SIZE:
            n = max(1, n // 10)
        kw = {"samples": 10} if quick and name == "dilution" else {}
        try:
            out.append(fn(np.random.default_rng(ss), n, **kw))
        except (ArithmeticError, ValueError, np.linalg.LinAlgError, EntmaxError) as exc:
            out.append(SuiteOutcome(name, n, float("-inf"), 0.0, {"error": f"{type(exc).__name__}: {exc}"}))
    return out
