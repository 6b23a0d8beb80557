"""Density matrices, state tangents and the Fisher informations of state families.

Infinite information is returned as ``math.inf``; it is never replaced by a
large finite number.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .linalg import NumericalFailure, eig_hermitian, hermitian

TRACE_TOL = 1e-10
PSD_TOL = 1e-10
PROB_TOL = 1e-12
# eigenvalue (sum) below which a direction is treated as outside the support
SUPPORT_TOL = 1e-10
# tangent mass above which an out-of-support component makes information infinite
LEAK_TOL = 1e-9


def as_density(rho) -> np.ndarray:
    rho = hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1) > TRACE_TOL:
        raise ValueError(f"density matrix must have unit trace, got {tr!r}")
    lam = np.linalg.eigvalsh(rho)[0]
    if lam < -PSD_TOL:
        raise ValueError(f"density matrix is not positive semidefinite (min eigenvalue {lam:.3e})")
    return rho


def as_tangent(delta) -> np.ndarray:
    delta = hermitian(delta)
    tr = np.trace(delta).real
    if abs(tr) > TRACE_TOL * max(1.0, float(np.linalg.norm(delta))):
        raise ValueError(f"state tangent must be traceless, got trace {tr!r}")
    return delta


def as_prob_vector(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("probability vector must be 1-d")
    if np.any(p < -PROB_TOL) or abs(p.sum() - 1) > PROB_TOL * max(1, p.size):
        raise ValueError("not a probability vector")
    return p


def as_signed_vector(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.ndim != 1:
        raise ValueError("signed vector must be 1-d")
    if abs(d.sum()) > PROB_TOL * max(1.0, float(np.abs(d).sum())):
        raise ValueError("classical tangent must sum to zero")
    return d


def as_povm(elements: Sequence, dim: int | None = None, tol: float = 1e-10) -> list[np.ndarray]:
    """Validate a list of POVM effects and return them as Hermitian arrays."""
    effects = [hermitian(E) for E in elements]
    if not effects:
        raise ValueError("POVM needs at least one element")
    d = effects[0].shape[0]
    if dim is not None and d != dim:
        raise ValueError(f"POVM acts on dimension {d}, expected {dim}")
    for k, E in enumerate(effects):
        if E.shape != (d, d):
            raise ValueError("POVM elements have inconsistent shapes")
        if np.linalg.eigvalsh(E)[0] < -tol:
            raise ValueError(f"POVM element {k} is not positive semidefinite")
    if np.max(np.abs(sum(effects) - np.eye(d))) > tol:
        raise ValueError("POVM elements do not sum to the identity")
    return effects


def classical_fisher(p, d, tol: float = PROB_TOL) -> float:
    """Fisher information ``sum d(x)^2 / p(x)`` of a distribution and its tangent.

    Outcomes with ``p(x) <= tol`` contribute nothing if ``|d(x)| <= tol`` and
    make the information infinite otherwise.
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    if p.shape != d.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {d.shape}")
    small = p <= tol
    if np.any(np.abs(d[small]) > tol):
        return math.inf
    return float(np.sum(d[~small] ** 2 / p[~small]))


def _sld_eigenbasis(rho: np.ndarray, delta: np.ndarray):
    """SLD in the eigenbasis of ``rho``; returns ``(L, J)`` or ``(None, inf)``.

    Inputs must already be Hermitian (no check in this hot path).
    """
    try:
        lam, V = np.linalg.eigh(rho)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    D = V.conj().T @ delta @ V
    D = (D + D.conj().T) / 2
    S = lam[:, None] + lam[None, :]
    outside = S <= SUPPORT_TOL
    if np.any(np.abs(D[outside]) > LEAK_TOL):
        return None, math.inf
    Lb = np.zeros_like(D)
    Lb[~outside] = 2 * D[~outside] / S[~outside]
    J = float(np.sum(2 * np.abs(D[~outside]) ** 2 / S[~outside]))
    L = V @ Lb @ V.conj().T
    return (L + L.conj().T) / 2, J


def sld(rho, delta) -> np.ndarray:
    """Symmetric logarithmic derivative ``L`` with ``(L rho + rho L) / 2 = delta``.

    Raises ``ValueError`` when ``delta`` has weight on the kernel of ``rho``,
    where no SLD exists (the information is infinite).
    """
    L, _ = _sld_eigenbasis(hermitian(rho), hermitian(delta))
    if L is None:
        raise ValueError("tangent leaves the support of the state; SLD Fisher information is infinite")
    return hermitian(L, tol=1e-8)


def sld_fisher(rho, delta) -> float:
    """SLD Fisher information ``tr rho L^2``."""
    return _sld_eigenbasis(hermitian(rho), hermitian(delta))[1]


def rld_fisher(rho, delta) -> float:
    """RLD Fisher information ``tr delta rho^{-1} delta`` (pseudo-inverse on the support)."""
    rho = hermitian(rho)
    delta = hermitian(delta)
    lam, V = eig_hermitian(rho)
    D = V.conj().T @ delta @ V
    kernel = lam <= SUPPORT_TOL
    if np.any(kernel) and np.linalg.norm(D[kernel, :]) > LEAK_TOL:
        return math.inf
    Ds = D[np.ix_(~kernel, ~kernel)]
    inv = 1.0 / lam[~kernel]
    return float(np.real(np.einsum("ij,j,ji->", Ds, inv, Ds)))


def measured_fisher(rho, delta, povm: Sequence) -> float:
    """Classical Fisher information of the outcome statistics of ``povm``."""
    effects = as_povm(povm, dim=np.shape(rho)[0])
    rho = np.asarray(rho)
    delta = np.asarray(delta)
    p = np.array([np.trace(rho @ E).real for E in effects])
    d = np.array([np.trace(delta @ E).real for E in effects])
    return classical_fisher(p, d)
