import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanmetric.linalg import (
    BELL, X, Z, eig_hermitian, hermitian, kron, min_eigenvalue, partial_trace, permute_factors,
    random_hermitian,
)

seeds = st.integers(0, 2**32 - 1)


def rand_matrix(rng, r, c):
    return rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))


def rand_density(rng, d):
    G = rand_matrix(rng, d, d)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def test_eig_diagonal_sorts_ascending():
    w, V = eig_hermitian(np.diag([2.0, 1.0]))
    assert np.allclose(w, [1, 2])
    assert np.allclose(np.abs(V), [[0, 1], [1, 0]])


def test_eig_pauli_x():
    w, V = eig_hermitian(X)
    assert np.allclose(w, [-1, 1])
    for k in range(2):
        assert np.allclose(X @ V[:, k], w[k] * V[:, k])
    minus = np.array([1, -1]) / np.sqrt(2)
    assert abs(abs(np.vdot(minus, V[:, 0])) - 1) < 1e-12


@pytest.mark.parametrize("d", [1, 2, 8, 64, 256])
def test_eig_reconstruction(d):
    rng = np.random.default_rng(d)
    A = random_hermitian(d, rng)
    w, V = eig_hermitian(A)
    scale = max(1.0, np.linalg.norm(A))
    assert np.linalg.norm(V @ np.diag(w) @ V.conj().T - A) <= 1e-10 * scale
    assert np.linalg.norm(A @ V - V * w) <= 1e-10 * scale
    assert np.linalg.norm(V.conj().T @ V - np.eye(d)) <= 1e-10


def test_hermitian_symmetrizes_and_rejects():
    A = np.array([[1, 1 + 1e-14], [1, 2]], dtype=complex)
    H = hermitian(A)
    assert np.array_equal(H, H.conj().T)
    with pytest.raises(ValueError):
        hermitian([[0, 1], [0, 0]])
    with pytest.raises(ValueError):
        hermitian(np.ones((2, 3)))


def test_kron_examples():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    XZ = kron(X, Z)
    expected = np.array([[0, 0, 1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, -1, 0, 0]])
    assert np.array_equal(XZ, expected)
    assert np.allclose(kron(Z, Z) @ BELL[0], BELL[0])


def test_kron_index_rule():
    rng = np.random.default_rng(1)
    A, B = rand_matrix(rng, 2, 3), rand_matrix(rng, 4, 5)
    K = kron(A, B)
    for i, j, k, l in [(0, 0, 0, 0), (1, 2, 3, 4), (1, 0, 2, 3)]:
        assert K[i * 4 + k, j * 5 + l] == pytest.approx(A[i, j] * B[k, l], rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_kron_associative(seed):
    # small integer entries keep every product exact, so equality is bitwise
    rng = np.random.default_rng(seed)

    def m(r, c):
        return rng.integers(-9, 10, size=(r, c)) + 1j * rng.integers(-9, 10, size=(r, c))

    A, B, C = m(2, 3), m(3, 2), m(2, 2)
    assert np.array_equal(kron(kron(A, B), C), kron(A, kron(B, C)))


def test_partial_trace_examples():
    rng = np.random.default_rng(2)
    rho, sigma = rand_density(rng, 2), rand_matrix(rng, 3, 3)
    assert np.allclose(partial_trace(kron(rho, sigma), (2, 3), keep=0), rho * np.trace(sigma))
    bell = 2 * np.outer(BELL[0], BELL[0].conj())
    assert np.allclose(partial_trace(bell, (2, 2), keep=0), np.eye(2))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_partial_trace_product_identity(seed, da, db):
    rng = np.random.default_rng(seed)
    A, B = rand_matrix(rng, da, da), rand_matrix(rng, db, db)
    AB = kron(A, B)
    assert np.allclose(partial_trace(AB, (da, db), keep=0), A * np.trace(B), atol=1e-12 * max(1, np.abs(AB).max()) * 10)
    assert np.allclose(partial_trace(AB, (da, db), keep=1), B * np.trace(A), atol=1e-12 * max(1, np.abs(AB).max()) * 10)
    assert np.isclose(np.trace(partial_trace(AB, (da, db), keep=1)), np.trace(AB))


def test_partial_trace_three_factors_and_errors():
    rng = np.random.default_rng(3)
    A, B, C = (rand_matrix(rng, d, d) for d in (2, 3, 2))
    M = kron(A, B, C)
    assert np.allclose(partial_trace(M, (2, 3, 2), keep=[0, 2]), kron(A, C) * np.trace(B))
    with pytest.raises(ValueError):
        partial_trace(np.eye(5), (2, 2), keep=0)
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), (2, 2), keep=2)


def test_permute_examples():
    rng = np.random.default_rng(4)
    A, B = rand_matrix(rng, 2, 2), rand_matrix(rng, 3, 3)
    AB = kron(A, B)
    assert np.array_equal(permute_factors(AB, (2, 3), (0, 1)), AB)
    BA = permute_factors(AB, (2, 3), (1, 0))
    assert np.allclose(BA, kron(B, A))
    assert np.allclose(permute_factors(BA, (3, 2), (1, 0)), AB)
    v = kron(np.array([1, 0]), np.array([0, 1, 0]))
    assert np.allclose(permute_factors(v, (2, 3), (1, 0)), kron(np.array([0, 1, 0]), np.array([1, 0])))
    with pytest.raises(ValueError):
        permute_factors(AB, (2, 3), (0, 0))


@settings(max_examples=30, deadline=None)
@given(seeds, st.permutations([0, 1, 2]))
def test_permute_preserves_norm(seed, perm):
    rng = np.random.default_rng(seed)
    dims = (2, 3, 2)
    M = rand_matrix(rng, 12, 12)
    P = permute_factors(M, dims, perm)
    assert np.linalg.norm(P) == pytest.approx(np.linalg.norm(M), rel=1e-15)
    assert sorted(np.abs(P).ravel()) == sorted(np.abs(M).ravel())


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(3)) == pytest.approx(1)
    assert min_eigenvalue(np.diag([3.0, -2.0])) == pytest.approx(-2)
    assert abs(min_eigenvalue(2 * np.outer(BELL[0], BELL[0].conj()))) < 1e-12
