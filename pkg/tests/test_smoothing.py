import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entmax.divergences import d_max
from entmax.errors import InvalidOperatorError
from entmax.linalg import BipartiteState, tensor
from entmax.measures import e_max, e_r
from entmax.smoothing import (
    constructive_smooth_e_max,
    delta_split,
    is_degenerate,
    lambda_for_epsilon,
    lemma2_smooth,
    lemma3_epsilon,
    lemma3_smooth,
    regularization_probe,
    smooth_d_max,
    smooth_e_max,
    spectral_overlap,
)
from entmax.states import ginibre_mixed, mes, product_mixture, pure_state

seeds = st.integers(0, 2**32 - 1)
PSI = pure_state([np.sqrt(0.9), np.sqrt(0.1)])

# cvxpy/Clarabel references, frozen: smooth E_max of PSI^{(x)n} at eps = 0.01
ORACLE_PSI_TRACE = {1: 1.5821215, 2: 2.5280361}


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.3])
def test_mes_smooth_closed_form(eps):
    # (1 - eps) Psi_2 is optimal in the ball, giving log2(2 (1 - eps))
    assert smooth_e_max(mes(2), eps) == pytest.approx(np.log2(2 * (1 - eps)), abs=1e-7)


@pytest.mark.parametrize("eps", [0.01, 0.1])
def test_separable_smooth_value(eps):
    # subnormalized operators in the ball: shrinking the trace is the only saving
    rho = product_mixture((2, 2), 3, np.random.default_rng(1))
    assert smooth_e_max(rho, eps) == pytest.approx(np.log2(1 - eps), abs=1e-7)


def test_pure_state_against_oracle():
    for n, tr in ORACLE_PSI_TRACE.items():
        M, d = tensor(PSI, PSI) if n == 2 else (PSI.matrix, PSI.dims)
        assert smooth_e_max(M, 0.01, d) == pytest.approx(np.log2(tr), abs=2e-7)


def test_zero_and_degenerate_eps():
    rho = ginibre_mixed((2, 2), np.random.default_rng(0), rank=2)
    assert smooth_e_max(rho, 0.0) == pytest.approx(e_max(rho).value, abs=1e-12)
    assert is_degenerate(rho, 1.0)
    assert smooth_e_max(rho, 1.0) == -np.inf
    sigma = np.eye(4) / 4
    assert smooth_d_max(rho, sigma, 0.0) == d_max(rho, sigma).value
    assert smooth_d_max(rho, sigma, 1.5) == -np.inf
    with pytest.raises(ValueError):
        smooth_e_max(rho, -0.1)


def test_smooth_dmax_commuting():
    # rho = diag(p), sigma = I/4: removing eps of the largest weight costs eps
    # in trace norm since the ball admits subnormalized operators
    p = np.array([0.7, 0.1, 0.1, 0.1])
    v = smooth_d_max(np.diag(p), np.eye(4) / 4, 0.2)
    assert v == pytest.approx(np.log2(4 * 0.5), abs=1e-7)


@given(seeds)
def test_smooth_monotone_in_eps(seed):
    rho = ginibre_mixed((2, 2), np.random.default_rng(seed), rank=1)
    vals = [smooth_e_max(rho, e) for e in (0.0, 0.02, 0.1)]
    assert vals[1] <= vals[0] + 1e-7
    assert vals[2] <= vals[1] + 1e-7


def test_delta_split():
    rng = np.random.default_rng(2)
    rho, sigma = ginibre_mixed((2, 2), rng), ginibre_mixed((2, 2), rng)
    plus, minus = delta_split(rho, sigma, 0.5)
    np.testing.assert_allclose(plus - minus, rho.matrix - 2**0.5 * sigma.matrix, atol=1e-14)
    assert np.linalg.eigvalsh(plus)[0] >= -1e-14
    assert np.linalg.eigvalsh(minus)[0] >= -1e-14
    assert np.abs(np.trace(plus @ minus)) <= 1e-14


@given(seeds, st.floats(0.0, 3.0))
def test_lemma3_construction(seed, drop):
    rng = np.random.default_rng(seed)
    rho = ginibre_mixed((2, 2), rng, rank=int(rng.integers(1, 5)))
    sigma = ginibre_mixed((2, 2), rng)
    lam = d_max(rho, sigma).value - drop
    rec = lemma3_smooth(rho, sigma, lam)
    eps, P = lemma3_epsilon(rho, sigma, lam)
    D = rec.diagnostics
    assert D["order_slack"] >= -1e-9
    assert D["distance"] <= rec.epsilon + 1e-9
    assert D["tbar_max"] <= 1 + 1e-9
    assert D["overlap_defect"] <= rec.delta_trace + 1e-9
    # Tr Delta+ <= Tr P rho, so the projector bound dominates
    assert rec.delta_trace <= eps**2 / 8 + 1e-9
    assert rec.smoothed_state.trace <= 1 + 1e-12


def test_lemma2_precondition():
    rho = mes(2)
    sigma = np.eye(4) / 4
    with pytest.raises(InvalidOperatorError):
        lemma2_smooth(rho, sigma, 0.0, np.zeros((4, 4)))
    rec = lemma2_smooth(rho, sigma, 2.0, np.zeros((4, 4)))
    np.testing.assert_allclose(rec.smoothed_state.matrix, rho.matrix, atol=1e-12)


def test_lambda_for_epsilon_is_feasible_and_tight():
    rng = np.random.default_rng(3)
    rho, sigma = ginibre_mixed((2, 2), rng), ginibre_mixed((2, 2), rng)
    lam = lambda_for_epsilon(rho, sigma, 0.5)
    assert lemma3_epsilon(rho, sigma, lam)[0] <= 0.5
    assert lemma3_epsilon(rho, sigma, lam - 1e-9)[0] > 0.5 or lam == d_max(rho, sigma).value
    assert lam <= d_max(rho, sigma).value
    assert lambda_for_epsilon(rho, sigma, 3.0) == -np.inf


def test_constructive_bound_dominates_exact():
    rho = ginibre_mixed((2, 2), np.random.default_rng(4), rank=1)
    for eps in (0.0, 0.05, 0.2):
        assert constructive_smooth_e_max(rho, eps) >= smooth_e_max(rho, eps) - 1e-7


def test_regularization_probe_two_copies():
    p = regularization_probe(mes(2), 0.01, max_copies=2)
    (n1, v1), (n2, v2) = p.values_per_copy
    assert (n1, n2) == (1, 2)
    assert v1 == pytest.approx(np.log2(2 * 0.99), abs=1e-7)
    assert v2 <= 1 + 1e-6
    assert p.subadditivity["pass"]
    assert p.er_reference == pytest.approx(1.0, abs=1e-6)


def test_regularization_bounds_on_pure_state():
    p = regularization_probe(PSI, 0.01, max_copies=2)
    emax = e_max(PSI).value
    er = e_r(PSI).value
    for _, v in p.values_per_copy:
        assert er - 0.1 <= v <= emax + 1e-6


def test_spectral_overlap_decreases_with_copies():
    er = e_r(PSI)
    gamma = er.value + 0.1
    ov = [spectral_overlap(PSI, er.certificates["sigma"], n, gamma) for n in (1, 2, 3)]
    assert ov[0] > ov[1] > ov[2]
    assert spectral_overlap(PSI, er.certificates["sigma"], 1, -10.0) == pytest.approx(1.0)


def test_subnormalized_input():
    rho = BipartiteState(np.eye(4) / 4, (2, 2))
    from entmax.linalg import SubnormalizedOperator

    half = SubnormalizedOperator(rho.matrix / 2, (2, 2))
    assert smooth_e_max(half, 0.1) == pytest.approx(np.log2(0.4), abs=1e-7)
