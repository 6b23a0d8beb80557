"""Dense complex linear algebra used throughout the package.

Tensor-product convention: the first factor is the most significant index,
i.e. ``kron(A, B)[i*rB + k, j*cB + l] == A[i, j] * B[k, l]``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12


class NumericalFailure(RuntimeError):
    """An eigensolver or optimizer failed to produce a usable result."""


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def hermitian(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(A + A^H) / 2`` after checking that ``A`` is Hermitian.

    The check is relative to ``max(1, ||A||_F)`` so that finite-difference
    round-off on large matrices does not trip it.
    """
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"Hermitian matrix must be square, got {A.shape}")
    scale = max(1.0, float(np.linalg.norm(A)))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    return (A + A.conj().T) / 2


def eig_hermitian(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    A = hermitian(A)
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Hermitian eigensolver did not converge: {exc}") from exc
    return w, V


def min_eigenvalue(A) -> float:
    A = hermitian(A)
    try:
        return float(np.linalg.eigvalsh(A)[0])
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc


def kron(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors)."""
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def _check_dims(A: np.ndarray, dims: Sequence[int]) -> None:
    n = int(np.prod(dims))
    if A.shape != (n, n):
        raise ValueError(f"matrix shape {A.shape} does not match factor dims {tuple(dims)}")


def partial_trace(A, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every tensor factor not listed in ``keep`` (0-based indices).

    >>> partial_trace(np.kron(np.eye(2), np.diag([1., 2.])), (2, 2), keep=1).real
    array([[2., 0.],
           [0., 4.]])
    """
    A = as_matrix(A)
    dims = [int(d) for d in dims]
    _check_dims(A, dims)
    keep = [keep] if np.isscalar(keep) else list(keep)
    k = len(dims)
    if any(not 0 <= i < k for i in keep):
        raise ValueError(f"keep indices {keep} out of range for {k} factors")
    keep = sorted(set(keep))
    T = A.reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    # trace highest axes first so that lower axis numbers stay valid
    for i in sorted(traced, reverse=True):
        cur = T.ndim // 2
        T = np.trace(T, axis1=i, axis2=i + cur)
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return T.reshape(d_keep, d_keep)


def permute_factors(A, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: new factor ``k`` is old factor ``perm[k]``.

    Works on square operators (both sides permuted) and on state vectors.
    """
    A = np.asarray(A, dtype=complex)
    dims = [int(d) for d in dims]
    perm = [int(p) for p in perm]
    k = len(dims)
    if sorted(perm) != list(range(k)):
        raise ValueError(f"{perm} is not a permutation of {k} factors")
    n = int(np.prod(dims))
    if A.ndim == 1:
        if A.shape != (n,):
            raise ValueError(f"vector length {A.shape[0]} does not match dims {tuple(dims)}")
        return A.reshape(dims).transpose(perm).reshape(n)
    _check_dims(A, dims)
    T = A.reshape(dims + dims).transpose(perm + [p + k for p in perm])
    return T.reshape(n, n)


def is_psd(A, tol: float = 1e-9) -> bool:
    return min_eigenvalue(A) >= -tol


def ket(*bits: int, dim: int = 2) -> np.ndarray:
    """Computational basis vector ``|b1 b2 ...>``."""
    v = np.zeros(dim ** len(bits), dtype=complex)
    idx = 0
    for b in bits:
        idx = idx * dim + b
    v[idx] = 1.0
    return v


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (G + G.conj().T) / 2


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

BELL = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, 1, -1, 0],
        [1, 0, 0, -1],
    ],
    dtype=complex,
) / np.sqrt(2)
"""Rows are Bell1..Bell4: (|00>+|11>), (|01>+|10>), (|01>-|10>), (|00>-|11>), each /sqrt(2)."""
