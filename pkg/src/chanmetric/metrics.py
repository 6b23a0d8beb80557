"""Monotone metrics on channel space.

``g_min`` is the smallest monotone metric (best SLD information over
entangled probes). The largest metric is only bounded from above here, by
explicit tangent simulations (``mixture_bound``) and by the two-point
mixture of ``Phi +- eps Delta`` (``g_max_upper``). ``g_r_output`` is the
output RLD information optimized over probes, which sits in between.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .channels import (
    BudgetExceeded, Channel, ChannelFamily, ChannelTangent, apply, apply_adjoint_extended,
    apply_pure_extended, n_copy, unitary_channel,
)
from .linalg import NumericalFailure, PAULIS, hermitian, random_unit_vector
from .states import (
    LEAK_TOL, SUPPORT_TOL, _sld_eigenbasis, as_prob_vector, as_signed_vector, classical_fisher,
    measured_fisher, rld_fisher,
)

RECONSTRUCTION_TOL = 1e-9
SUPPORT_ESCAPE = "support-escape"
ZERO_RADIUS = "zero-cp-radius"


class InvalidSimulation(ValueError):
    """A mixture does not reproduce the channel and tangent it claims to simulate."""


@dataclass
class MetricReport:
    value: float
    witness: object = None
    iterations: int = 0
    converged: bool = True
    restarts: int = 0
    reason: str | None = None
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def worker_count() -> int:
    """Worker cap from ``CHANNEL_METRIC_THREADS`` (default 1)."""
    raw = os.environ.get("CHANNEL_METRIC_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map(fn, items):
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _restart_rngs(seed: int, restarts: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(restarts)]


def maximally_entangled(d: int, d_anc: int | None = None) -> np.ndarray:
    d_anc = d if d_anc is None else d_anc
    psi = np.zeros(d * d_anc, dtype=complex)
    for i in range(min(d, d_anc)):
        psi[i * d_anc + i] = 1
    return psi / np.linalg.norm(psi)


def _probe_dims(phi: Channel, delta: ChannelTangent, d_anc: int | None) -> int:
    if (phi.d_in, phi.d_out) != (delta.d_in, delta.d_out):
        raise ValueError("channel and tangent dimensions differ")
    return phi.d_in if d_anc is None else d_anc


# --- smallest metric --------------------------------------------------------

def _top_eigenvector(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    try:
        _, V = scipy.linalg.eigh(A, subset_by_index=[n - 1, n - 1], check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"probe update failed: {exc}") from exc
    return V[:, 0]


def _seesaw(phi, delta, psi, d_anc, tol, max_iter):
    """Alternate SLD update and probe update (top eigenvector) from ``psi``.

    Returns ``(value, psi, iterations, converged, history)``.
    """
    L, J = _sld_eigenbasis(apply_pure_extended(phi, psi, d_anc), apply_pure_extended(delta, psi, d_anc))
    history = [J]
    if L is None:
        return math.inf, psi, 0, True, history
    for it in range(1, max_iter + 1):
        A = 2 * apply_adjoint_extended(delta, L, d_anc) - apply_adjoint_extended(phi, L @ L, d_anc)
        new_psi = _top_eigenvector((A + A.conj().T) / 2)
        new_L, new_J = _sld_eigenbasis(
            apply_pure_extended(phi, new_psi, d_anc), apply_pure_extended(delta, new_psi, d_anc)
        )
        history.append(new_J)
        if new_L is None:
            return math.inf, new_psi, it, True, history
        gain = new_J - J
        if new_J >= J:
            psi, L, J = new_psi, new_L, new_J
        if gain <= tol * max(abs(J), 1e-300):
            return J, psi, it, True, history
    return J, psi, max_iter, False, history


def g_min(
    phi: Channel,
    delta: ChannelTangent,
    restarts: int = 16,
    tol: float = 1e-9,
    max_iter: int = 500,
    seed: int = 0,
    d_anc: int | None = None,
) -> MetricReport:
    """Smallest monotone metric: sup over pure probes of the output SLD information.

    Each restart runs the seesaw from its own seeded random probe (restart 0
    starts from the maximally entangled probe). The best run is reported;
    ``converged`` is true when that run met the relative-improvement ``tol``.
    A value of ``inf`` means some probe produced a tangent with weight
    outside the output support.
    """
    d_anc = _probe_dims(phi, delta, d_anc)
    D = phi.d_in * d_anc
    rngs = _restart_rngs(seed, restarts)
    starts = [maximally_entangled(phi.d_in, d_anc)] + [random_unit_vector(D, g) for g in rngs[1:]]

    runs = _map(lambda psi0: _seesaw(phi, delta, psi0, d_anc, tol, max_iter), starts)
    best = max(runs, key=lambda r: r[0])
    value, psi, iters, conv, hist = best
    return MetricReport(
        value=value,
        witness=psi,
        iterations=iters,
        converged=conv,
        restarts=len(starts),
        reason=SUPPORT_ESCAPE if math.isinf(value) else None,
        history=hist,
    )


def g_min_measured(phi: Channel, delta: ChannelTangent, psi, povm: Sequence, d_anc: int | None = None) -> float:
    """Classical Fisher information of measuring ``(Phi (x) I)(psi)`` with ``povm``."""
    d_anc = _probe_dims(phi, delta, d_anc)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (phi.d_in * d_anc,):
        raise ValueError(f"probe length {psi.shape} does not match {phi.d_in} x {d_anc}")
    psi = psi / np.linalg.norm(psi)
    return measured_fisher(
        apply_pure_extended(phi, psi, d_anc), apply_pure_extended(delta, psi, d_anc), povm
    )


# --- tangent simulations ----------------------------------------------------

@dataclass(eq=False)
class MixtureSimulation:
    """``Phi = sum_y q(y) Lambda_y`` and ``Delta = sum_y dq(y) Lambda_y``."""

    q: np.ndarray
    dq: np.ndarray
    branches: list[Channel]

    def __post_init__(self):
        self.q = as_prob_vector(self.q)
        self.dq = as_signed_vector(self.dq)
        if not (len(self.q) == len(self.dq) == len(self.branches)):
            raise InvalidSimulation("q, dq and branches must have the same length")

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        C = sum(qy * b.choi for qy, b in zip(self.q, self.branches))
        D = sum(dy * b.choi for dy, b in zip(self.dq, self.branches))
        return C, D

    def check(self, phi: Channel, delta: ChannelTangent, tol: float = RECONSTRUCTION_TOL) -> None:
        C, D = self.reconstruct()
        err_c = np.linalg.norm(C - phi.choi)
        err_d = np.linalg.norm(D - delta.choi)
        if err_c > tol or err_d > tol:
            raise InvalidSimulation(
                f"mixture does not reproduce the family (channel error {err_c:.2e}, tangent error {err_d:.2e})"
            )


def mixture_bound(sim: MixtureSimulation, phi: Channel, delta: ChannelTangent) -> float:
    """Upper bound ``J_q(dq)`` on the largest metric from a checked tangent simulation."""
    sim.check(phi, delta)
    return classical_fisher(sim.q, sim.dq)


def pauli_mixture(family: ChannelFamily, theta: float) -> MixtureSimulation:
    """Random-Pauli simulation: branch ``k`` conjugates by the ``k``-th Pauli matrix."""
    probs = getattr(family, "pauli_probabilities", None)
    if probs is None:
        raise ValueError(f"family {family.name!r} is not a Pauli family")
    q, dq = probs(theta)
    return MixtureSimulation(np.clip(q, 0, None), dq, [unitary_channel(s) for s in PAULIS])


def two_point_mixture(phi: Channel, delta: ChannelTangent, eps: float) -> MixtureSimulation:
    """Equal mixture of ``Phi + eps Delta`` and ``Phi - eps Delta``."""
    if eps <= 0:
        raise InvalidSimulation("two-point mixture needs eps > 0")
    plus = Channel(phi.d_in, phi.d_out, phi.choi + eps * delta.choi)
    minus = Channel(phi.d_in, phi.d_out, phi.choi - eps * delta.choi)
    w = 1 / (2 * eps)
    return MixtureSimulation(np.array([0.5, 0.5]), np.array([w, -w]), [plus, minus])


def catalog_mixtures(family: ChannelFamily, theta: float) -> list[MixtureSimulation]:
    if hasattr(family, "pauli_probabilities"):
        return [pauli_mixture(family, theta)]
    return []


# --- CP ball ----------------------------------------------------------------

@dataclass
class CPBall:
    eps: float
    eps_hi: float
    capped: bool = False
    reason: str | None = None


def _both_psd(C, D, eps, tol):
    return (np.linalg.eigvalsh(C + eps * D)[0] >= -tol) and (np.linalg.eigvalsh(C - eps * D)[0] >= -tol)


def cp_ball(phi: Channel, delta: ChannelTangent, tol: float = 1e-10, cap: float = 1e6) -> CPBall:
    """Largest ``eps`` with ``Choi(Phi) +- eps Choi(Delta)`` both PSD, by bisection."""
    C, D = phi.choi, delta.choi
    if np.max(np.abs(D), initial=0.0) <= 1e-14:
        return CPBall(cap, cap, capped=True)
    lam, V = np.linalg.eigh(C)
    kernel = lam <= SUPPORT_TOL
    if np.any(kernel):
        Db = V.conj().T @ D @ V
        if np.linalg.norm(Db[kernel, :]) > LEAK_TOL:
            return CPBall(0.0, 0.0, reason=SUPPORT_ESCAPE)
    w = np.linalg.eigvalsh(D)
    # v^H (C + eps D) v < 0 for the extreme eigenvector v once eps > ||C|| / |w|
    eps_hi = min(float(lam[-1]) / max(-w[0], w[-1]), cap)
    if _both_psd(C, D, eps_hi, tol):
        return CPBall(eps_hi, eps_hi, capped=eps_hi == cap)
    lo, hi = 0.0, eps_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _both_psd(C, D, mid, tol):
            lo = mid
        else:
            hi = mid
    return CPBall(lo, eps_hi, reason=ZERO_RADIUS if lo == 0 else None)


def cp_ball_radius(phi: Channel, delta: ChannelTangent) -> float:
    return cp_ball(phi, delta).eps


def g_max_upper(
    phi: Channel, delta: ChannelTangent, mixtures: Sequence[MixtureSimulation] = ()
) -> MetricReport:
    """Best available upper bound on the largest metric.

    The two-point bound ``eps**-2`` is cross-checked against the explicit
    two-branch simulation; any extra mixtures are validated and included.
    """
    ball = cp_ball(phi, delta)
    candidates: list[tuple[float, object]] = []
    if ball.capped:
        # zero tangent: the trivial one-branch simulation has dq = 0
        candidates.append((0.0, MixtureSimulation(np.array([1.0]), np.array([0.0]), [phi])))
    elif ball.eps > 0:
        sim = two_point_mixture(phi, delta, ball.eps)
        bound = mixture_bound(sim, phi, delta)
        if not math.isclose(bound, ball.eps ** -2, rel_tol=1e-9):
            raise NumericalFailure(f"two-point bound {bound} disagrees with eps^-2 = {ball.eps ** -2}")
        candidates.append((bound, sim))
    for sim in mixtures:
        candidates.append((mixture_bound(sim, phi, delta), sim))
    if not candidates:
        return MetricReport(math.inf, witness=ball, reason=ball.reason or ZERO_RADIUS)
    value, witness = min(candidates, key=lambda c: c[0])
    reason = ZERO_RADIUS if math.isinf(value) else None
    return MetricReport(value, witness=witness, reason=reason)


# --- output RLD information -------------------------------------------------

def _rld_objective(phi, delta, d_anc):
    D = phi.d_in * d_anc

    def f(x):
        psi = (x[:D] + 1j * x[D:]) / np.linalg.norm(x)
        return rld_fisher(apply_pure_extended(phi, psi, d_anc), apply_pure_extended(delta, psi, d_anc))

    return f


def _ascent(f, x, tol, max_iter, h=1e-6):
    """Projected gradient ascent on the unit sphere with step halving.

    Infinity at the (generic) starting point is reported as the value.
    Non-finite values met later come from near-singular outputs and are
    treated as failed steps.
    """
    x = x / np.linalg.norm(x)
    fx = f(x)
    history = [fx]
    if math.isinf(fx):
        return fx, x, 0, True, history
    step = 0.1
    for it in range(1, max_iter + 1):
        g = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = h
            g[k] = (f(x + e) - f(x - e)) / (2 * h)
        if not np.all(np.isfinite(g)):
            return fx, x, it, False, history
        g -= (g @ x) * x
        gn = np.linalg.norm(g)
        if gn == 0:
            return fx, x, it, True, history
        g /= gn
        while step > 1e-14:
            y = x + step * g
            y /= np.linalg.norm(y)
            fy = f(y)
            if np.isfinite(fy) and fy > fx:
                break
            step /= 2
        else:
            return fx, x, it, True, history
        gain = fy - fx
        x, fx = y, fy
        history.append(fx)
        step = min(2 * step, 1.0)
        if gain <= tol * abs(fx):
            return fx, x, it, True, history
    return fx, x, max_iter, False, history


def g_r_output(
    phi: Channel,
    delta: ChannelTangent,
    restarts: int = 16,
    tol: float = 1e-8,
    max_iter: int = 2000,
    seed: int = 0,
    d_anc: int | None = None,
) -> MetricReport:
    """Sup over probes of the RLD information of ``((Phi (x) I)(psi), (Delta (x) I)(psi))``."""
    d_anc = _probe_dims(phi, delta, d_anc)
    D = phi.d_in * d_anc
    f = _rld_objective(phi, delta, d_anc)
    rngs = _restart_rngs(seed, restarts)
    psi0 = maximally_entangled(phi.d_in, d_anc)
    starts = [np.concatenate([psi0.real, psi0.imag])]
    for g in rngs[1:]:
        starts.append(g.normal(size=2 * D))
    runs = _map(lambda x0: _ascent(f, x0, tol, max_iter), starts)
    value, x, iters, conv, hist = max(runs, key=lambda r: r[0])
    psi = (x[:D] + 1j * x[D:]) / np.linalg.norm(x)
    return MetricReport(
        value, witness=psi, iterations=iters, converged=conv, restarts=len(starts),
        reason=SUPPORT_ESCAPE if math.isinf(value) else None, history=hist,
    )


# --- parallel repetition and classical channels -------------------------------

@dataclass
class ScalingRow:
    n: int
    g_min_over_n: float
    restarts: int
    converged: bool
    report: MetricReport = field(repr=False, default=None)


def parallel_scaling(
    family: ChannelFamily,
    theta: float,
    n_max: int,
    restarts: int = 16,
    restarts_large: int = 32,
    tol: float = 1e-9,
    max_iter: int = 500,
    seed: int = 0,
) -> list[ScalingRow]:
    """``g_min(Phi^{(x)n}, Delta^{(n)}) / n`` for ``n = 1..n_max``."""
    phi, delta = family.local(theta)
    if (phi.d_in * phi.d_out) ** n_max > 256:
        raise BudgetExceeded(f"n_max={n_max} exceeds the memory budget for this family")
    rows = []
    for n in range(1, n_max + 1):
        phin, deltan = n_copy(phi, delta, n)
        r = restarts if n < 3 else restarts_large
        rep = g_min(phin, deltan, restarts=r, tol=tol, max_iter=max_iter, seed=seed + n)
        rows.append(ScalingRow(n, rep.value / n, rep.restarts, rep.converged, rep))
    return rows


def transition_of(ch) -> np.ndarray:
    """Transition matrix ``T[x, y]`` of a channel embedded as a dephasing map."""
    C = ch.choi
    if np.max(np.abs(C - np.diag(np.diag(C)))) > 1e-12:
        raise ValueError("channel is not a classical (diagonal Choi) channel")
    return np.diag(C).real.reshape(ch.d_in, ch.d_out)


def classical_channel_min(family: ChannelFamily, theta: float) -> float:
    """``max_x J(T(.|x), dT(.|x))`` for a finite-alphabet classical channel family."""
    phi, delta = family.local(theta)
    T, dT = transition_of(phi), transition_of(delta)
    return max(classical_fisher(T[x], dT[x]) for x in range(T.shape[0]))
