import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entmax import config
from entmax.errors import DimensionError, InvalidOperatorError
from entmax.linalg import (
    BipartiteState,
    Dims,
    SubnormalizedOperator,
    fidelity,
    gentle_measurement_check,
    hermitian,
    is_ppt,
    partial_trace,
    partial_transpose,
    positive_part_projector,
    psd_inv_sqrt,
    psd_sqrt,
    schmidt_decompose,
    tensor,
    tensor_power,
    trace_distance_split,
    trace_norm,
)
from entmax.states import ginibre_mixed, haar_pure, haar_unitary, isotropic, mes, pure_state

seeds = st.integers(0, 2**32 - 1)
dims_st = st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3)])


def test_dims_validation():
    with pytest.raises(DimensionError):
        Dims(0, 2)
    with pytest.raises(DimensionError):
        Dims(2.5, 2)
    assert Dims.of((2, 3)).d == 6


def test_state_validation():
    with pytest.raises(InvalidOperatorError):
        BipartiteState(np.diag([0.5, 0.5, 0.5, -0.5]), (2, 2))
    with pytest.raises(InvalidOperatorError):
        BipartiteState(np.eye(4) / 2, (2, 2))
    with pytest.raises(InvalidOperatorError):
        hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionError):
        BipartiteState(np.eye(4) / 4, (2, 3))
    sub = SubnormalizedOperator(np.eye(4) / 8, (2, 2))
    assert sub.trace == pytest.approx(0.5)


def test_partial_trace_of_product(rng):
    a = ginibre_mixed((2, 1), rng).matrix
    b = ginibre_mixed((3, 1), rng).matrix
    rho = np.kron(a, b)
    np.testing.assert_allclose(partial_trace(rho, (2, 3), keep="A"), a, atol=1e-14)
    np.testing.assert_allclose(partial_trace(rho, (2, 3), keep="B"), b, atol=1e-14)


def test_partial_transpose_explicit():
    # PT on A of |a><a'| (x) |b><b'| is |a'><a| (x) |b><b'|
    E = np.zeros((2, 2))
    E[0, 1] = 1
    F = np.zeros((3, 3))
    F[2, 0] = 1
    out = partial_transpose(np.kron(E, F), (2, 3))
    np.testing.assert_array_equal(out, np.kron(E.T, F))


def test_mes_partial_transpose_is_swap_over_m():
    M = 3
    pt = partial_transpose(mes(M).matrix, (M, M))
    swap = np.zeros((M * M, M * M))
    for i in range(M):
        for j in range(M):
            swap[i * M + j, j * M + i] = 1
    np.testing.assert_allclose(pt, swap / M, atol=1e-15)
    assert trace_norm(pt) == pytest.approx(M)


@given(seeds, dims_st)
def test_partial_transpose_involution_and_trace(seed, dims):
    rho = ginibre_mixed(dims, np.random.default_rng(seed)).matrix
    pt = partial_transpose(rho, dims)
    np.testing.assert_allclose(partial_transpose(pt, dims), rho, atol=1e-14)
    assert np.trace(pt).real == pytest.approx(1.0)
    np.testing.assert_allclose(pt, pt.conj().T, atol=1e-14)
    assert trace_norm(pt) >= 1 - 1e-12


@given(seeds)
def test_trace_norm_split_matches_eigenvalues(seed):
    rng = np.random.default_rng(seed)
    a = ginibre_mixed((2, 2), rng).matrix
    b = ginibre_mixed((2, 2), rng).matrix
    assert trace_distance_split(a, b) == pytest.approx(trace_norm(a - b), abs=1e-12)
    assert trace_norm(a - b) == pytest.approx(np.sum(np.linalg.svd(a - b, compute_uv=False)), abs=1e-12)


def test_fidelity_pure_is_overlap(rng):
    a = haar_pure((2, 2), rng)
    b = haar_pure((2, 2), rng)
    va = np.linalg.eigh(a.matrix)[1][:, -1]
    vb = np.linalg.eigh(b.matrix)[1][:, -1]
    assert fidelity(a.matrix, b.matrix) == pytest.approx(abs(va.conj() @ vb), abs=1e-12)
    assert fidelity(a.matrix, a.matrix) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_commuting_is_bhattacharyya():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    q = np.array([0.4, 0.3, 0.2, 0.1])
    assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(np.sum(np.sqrt(p * q)), abs=1e-14)


@given(seeds)
def test_fidelity_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    a = ginibre_mixed((2, 2), rng).matrix
    b = ginibre_mixed((2, 2), rng).matrix
    U = haar_unitary(4, rng)
    f = fidelity(a, b)
    assert 0 <= f <= 1 + 1e-12
    assert fidelity(U @ a @ U.conj().T, U @ b @ U.conj().T) == pytest.approx(f, abs=1e-10)


def test_psd_functions(rng):
    a = ginibre_mixed((2, 2), rng).matrix
    r = psd_sqrt(a)
    np.testing.assert_allclose(r @ r, a, atol=1e-13)
    ri = psd_inv_sqrt(a)
    np.testing.assert_allclose(ri @ a @ ri, np.eye(4), atol=1e-9)
    P = np.diag([1.0, 0, 0, 0])
    np.testing.assert_allclose(psd_inv_sqrt(P), P)


def test_positive_part_projector_strictness():
    A = np.diag([2.0, 1.0, 0.5])
    B = np.eye(3)
    np.testing.assert_allclose(positive_part_projector(A, B, strict=True), np.diag([1, 0, 0]))
    np.testing.assert_allclose(positive_part_projector(A, B, strict=False), np.diag([1, 1, 0]))


def test_schmidt_of_pure_state():
    psi = pure_state([np.sqrt(0.9), np.sqrt(0.1)])
    v = np.linalg.eigh(psi.matrix)[1][:, -1]
    sd = schmidt_decompose(v, (2, 2))
    np.testing.assert_allclose(sd.coefficients, [np.sqrt(0.9), np.sqrt(0.1)], atol=1e-14)
    rebuilt = sum(c * np.kron(sd.left[:, i], sd.right[:, i]) for i, c in enumerate(sd.coefficients))
    np.testing.assert_allclose(abs(rebuilt.conj() @ v), 1.0, atol=1e-14)


def test_tensor_groups_a_factors_first():
    # |0><0|_A |1><1|_B  (x)  |1><1|_A' |0><0|_B'  ->  |01><01|_{AA'} |10><10|_{BB'}
    e = np.eye(2)
    x = np.kron(np.outer(e[0], e[0]), np.outer(e[1], e[1]))
    y = np.kron(np.outer(e[1], e[1]), np.outer(e[0], e[0]))
    T, d = tensor(x, y, (2, 2), (2, 2))
    assert d == Dims(4, 4)
    idx = 1 * 4 + 2  # A index 01 = 1, B index 10 = 2
    assert T[idx, idx] == 1
    assert np.sum(np.abs(T)) == 1


def test_tensor_power_marginals(rng):
    rho = ginibre_mixed((2, 2), rng)
    T, d = tensor_power(rho, 2)
    assert d == Dims(4, 4)
    ra = partial_trace(rho, keep="A")
    np.testing.assert_allclose(partial_trace(T, d, keep="A"), np.kron(ra, ra), atol=1e-14)
    with pytest.raises(DimensionError):
        tensor_power(rho, 7)


def test_is_ppt():
    assert is_ppt(isotropic(1 / 3))
    assert not is_ppt(isotropic(0.34))
    with config.tolerance(1.0):
        assert is_ppt(isotropic(0.34))


@given(seeds)
def test_gentle_measurement_bound(seed):
    rng = np.random.default_rng(seed)
    rho = ginibre_mixed((2, 2), rng).matrix * rng.uniform(0.3, 1)
    U = haar_unitary(4, rng)
    L = (U * rng.uniform(size=4)) @ U.conj().T
    post, lhs, rhs = gentle_measurement_check(rho, (L + L.conj().T) / 2)
    assert lhs <= rhs + 1e-9
    assert np.trace(post).real <= np.trace(rho).real + 1e-12


def test_gentle_measurement_rejects_bad_effect():
    with pytest.raises(InvalidOperatorError):
        gentle_measurement_check(np.eye(2) / 2, 2 * np.eye(2))
