from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entmax.io import read_state
from entmax.linalg import partial_transpose
from entmax.sdp import (
    SdpProblem,
    Term,
    build_emax_sdp,
    build_lmo_sdp,
    build_smooth_dmax_sdp,
    build_smooth_emax_sdp,
    solve,
)
from entmax.sdp.coords import basis, pt_signed_perm, quad_form
from entmax.states import ginibre_mixed

seeds = st.integers(0, 2**32 - 1)

# Independent oracle values (cvxpy with Clarabel at 1e-11 tolerances), frozen.
ORACLE = {
    "emax_2x2_seed11_rank2": 0.05703333865136136,
    "emax_2x3_seed5_rank2": 0.5853560017893965,
    "smooth_emax_2x2_seed11_rank2_eps0.05": -0.03152660622854363,
    "smooth_dmax_seed11_seed12_eps0.05": 6.113771770391003,
    # Clarabel reports optimal_inaccurate here; it agrees with our bracket to ~1e-7 relative
    "smooth_dmax_illcond": 8.719080677454755,
}

DATA = Path(__file__).parent / "data"


@pytest.mark.parametrize("cplx", [False, True])
def test_svec_is_isometry(cplx):
    B = basis(4, cplx)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 4)) + (1j * rng.normal(size=(4, 4)) if cplx else 0)
    Y = rng.normal(size=(4, 4)) + (1j * rng.normal(size=(4, 4)) if cplx else 0)
    X, Y = X + X.conj().T, Y + Y.conj().T
    assert B.svec(X) @ B.svec(Y) == pytest.approx(np.real(np.trace(X @ Y)))
    np.testing.assert_allclose(B.smat(B.svec(X)), X, atol=1e-14)
    assert B.N == (16 if cplx else 10)


@pytest.mark.parametrize("cplx", [False, True])
@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 2)])
def test_pt_signed_permutation(cplx, dims):
    n = dims[0] * dims[1]
    B = basis(n, cplx)
    perm, sign = pt_signed_perm(n, *dims, cplx)
    rng = np.random.default_rng(1)
    u = rng.normal(size=B.N)
    np.testing.assert_allclose(B.svec(partial_transpose(B.smat(u), dims)), sign * u[perm], atol=1e-14)


def test_quad_form_matches_definition():
    B = basis(3, True)
    rng = np.random.default_rng(2)
    G = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    Q = G @ G.conj().T
    K = quad_form(B, Q)
    E = [B.smat(e) for e in np.eye(B.N)]
    ref = np.array([[np.real(np.trace(a @ Q @ b @ Q)) for b in E] for a in E])
    np.testing.assert_allclose(K, ref, atol=1e-12)


def test_lp_in_scalar_form():
    # min -x - 2y  s.t.  x + y <= 1, x, y >= 0 (as 1x1 PSD blocks)  ->  -2
    p = SdpProblem()
    x, y = p.scalar("x"), p.scalar("y")
    one = np.ones((1, 1))
    p.minimize([(x, -one), (y, -2 * one)])
    p.add_psd([Term(x)])
    p.add_psd([Term(y)])
    p.add_le([(x, one), (y, one)], 1.0)
    sol = solve(p)
    assert sol.optimal
    assert sol.primal_value == pytest.approx(-2.0, abs=1e-7)
    assert sol.scalar(y) == pytest.approx(1.0, abs=1e-6)


@given(seeds)
def test_min_eigenvalue_sdp(seed):
    # min Tr(C X) over density matrices equals lambda_min(C)
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    C = G + G.conj().T
    p = SdpProblem()
    X = p.variable(4, True, "X")
    p.minimize([(X, C)])
    p.add_psd([Term(X)])
    p.add_eq([(X, np.eye(4))], 1.0)
    sol = solve(p)
    assert sol.optimal
    assert sol.primal_value == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-6)
    assert sol.dual_value == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-6)


def test_infeasible_detected():
    p = SdpProblem()
    X = p.variable(2, False, "X")
    p.minimize([(X, np.eye(2))])
    p.add_psd([Term(X)])
    p.add_eq([(X, np.eye(2))], -1.0)
    assert solve(p).status == "infeasible"


def test_unbounded_detected():
    p = SdpProblem()
    x = p.scalar("x")
    p.minimize([(x, -np.ones((1, 1)))])
    p.add_psd([Term(x)])
    assert solve(p).status == "infeasible"


def test_problem_serialization_round_trip():
    rho = ginibre_mixed((2, 2), np.random.default_rng(4))
    p = build_smooth_emax_sdp(rho, 0.05)
    q = SdpProblem.loads(p.dumps())
    assert q.dumps() == p.dumps()
    assert solve(q).primal_value == pytest.approx(solve(p).primal_value, abs=1e-9)


def test_field_selection():
    real = build_emax_sdp(np.eye(4) / 4, (2, 2))
    assert not real.get("X").cplx
    cplx = build_emax_sdp(ginibre_mixed((2, 2), np.random.default_rng(0)))
    assert cplx.get("X").cplx


def test_emax_against_oracle():
    a = ginibre_mixed((2, 2), np.random.default_rng(11), rank=2)
    b = ginibre_mixed((2, 3), np.random.default_rng(5), rank=2)
    for key, rho in (("emax_2x2_seed11_rank2", a), ("emax_2x3_seed5_rank2", b)):
        sol = solve(build_emax_sdp(rho))
        assert sol.optimal
        assert np.log2(sol.primal_value) == pytest.approx(ORACLE[key], abs=1e-7)
        assert sol.residuals["min_eig"] >= -1e-8


def test_smooth_problems_against_oracle():
    a = ginibre_mixed((2, 2), np.random.default_rng(11), rank=2)
    s = ginibre_mixed((2, 2), np.random.default_rng(12))
    sol = solve(build_smooth_emax_sdp(a, 0.05))
    assert np.log2(sol.primal_value) == pytest.approx(ORACLE["smooth_emax_2x2_seed11_rank2_eps0.05"], abs=1e-7)
    sol = solve(build_smooth_dmax_sdp(a, s, 0.05))
    assert np.log2(sol.primal_value) == pytest.approx(ORACLE["smooth_dmax_seed11_seed12_eps0.05"], abs=1e-7)


def test_ill_conditioned_smooth_dmax():
    # pure rho, sigma with an eigenvalue near 2e-5 and a large ball: the
    # linear solves lose accuracy close to the optimum
    rho = read_state(DATA / "illcond_rho.json").matrix
    sigma = read_state(DATA / "illcond_sigma.json").matrix
    sol = solve(build_smooth_dmax_sdp(rho, sigma, 0.6124928193744577))
    assert sol.optimal
    assert sol.dual_value <= sol.primal_value * (1 + 1e-8)
    assert np.log2(sol.primal_value) == pytest.approx(ORACLE["smooth_dmax_illcond"], abs=1e-6)
    assert sol.iterations < 100


def test_lmo_returns_ppt_state():
    rng = np.random.default_rng(6)
    G = rng.normal(size=(4, 4))
    sol = solve(build_lmo_sdp(G + G.T, (2, 2)))
    S = sol.blocks[0]
    assert np.trace(S).real == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.eigvalsh(S)[0] >= -1e-8
    assert np.linalg.eigvalsh(partial_transpose(S, (2, 2)))[0] >= -1e-8


def test_duality_on_emax():
    # the dual value certifies the primal: both agree to the solver gap
    rho = ginibre_mixed((2, 2), np.random.default_rng(8), rank=1)
    sol = solve(build_emax_sdp(rho))
    assert sol.gap <= 1e-7
    assert abs(sol.primal_value - sol.dual_value) <= 1e-7 * (1 + abs(sol.primal_value))
