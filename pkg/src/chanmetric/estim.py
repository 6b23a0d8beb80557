"""Monte Carlo estimation of a channel parameter with a fixed i.i.d. strategy.

Each trial feeds ``n_uses`` copies of the probe through ``Phi_theta (x) I``,
measures every output with the same POVM, and estimates ``theta`` by
maximum likelihood from the outcome counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import ChannelFamily
from .linalg import BELL, ket
from .metrics import g_min, maximally_entangled
from .states import as_povm, classical_fisher

GOLDEN = (math.sqrt(5) - 1) / 2


class DegenerateStrategy(ValueError):
    """The outcome statistics carry no information about the parameter."""


@dataclass(eq=False)
class Strategy:
    probe: np.ndarray
    povm: list
    d_anc: int = 1
    estimator: str = "mle_grid"
    resolution: float = 1e-6
    window: float = 0.5
    name: str = "custom"

    def __post_init__(self):
        psi = np.asarray(self.probe, dtype=complex)
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1) > 1e-12:
            raise ValueError(f"probe must have unit norm, got {nrm}")
        self.probe = psi
        self.povm = as_povm(self.povm)
        if self.estimator not in ("mle_grid", "mle_newton"):
            raise ValueError(f"unknown estimator {self.estimator!r}")


def bell_strategy(d: int = 2, **kw) -> Strategy:
    """Maximally entangled probe, measured in the generalized Bell basis (qubits: the four Bell states)."""
    if d != 2:
        raise ValueError("Bell strategy is defined for qubit channels")
    return Strategy(maximally_entangled(2), [np.outer(b, b.conj()) for b in BELL], d_anc=2, name="bell", **kw)


def bell_phase_strategy(**kw) -> Strategy:
    """Bell probe measured on ``(Bell1 +- i Bell4)/sqrt 2``: sensitive to Z rotations near theta = 0."""
    plus = (BELL[0] + 1j * BELL[3]) / np.sqrt(2)
    minus = (BELL[0] - 1j * BELL[3]) / np.sqrt(2)
    basis = [plus, minus, BELL[1], BELL[2]]
    return Strategy(maximally_entangled(2), [np.outer(b, b.conj()) for b in basis], d_anc=2, name="bell_phase", **kw)


def computational_strategy(d: int = 2, **kw) -> Strategy:
    """Probe ``|0>`` without ancilla, computational-basis readout."""
    return Strategy(ket(0, dim=d), [np.outer(ket(i, dim=d), ket(i, dim=d)) for i in range(d)],
                    d_anc=1, name="computational", **kw)


def trivial_strategy(d: int = 2, **kw) -> Strategy:
    """One-outcome measurement; carries no information."""
    return Strategy(ket(0, dim=d), [np.eye(d)], d_anc=1, name="identity", **kw)


STRATEGIES = {
    "bell": bell_strategy,
    "bell_phase": lambda d=2, **kw: bell_phase_strategy(**kw),
    "computational": computational_strategy,
    "identity": trivial_strategy,
}


def _response(family: ChannelFamily, strategy: Strategy) -> np.ndarray:
    """Tensor ``W[x, i, a, j, b]`` with ``p_x = Re sum W[x] * C[i, a, j, b]``."""
    di, do, da = family.d_in, family.d_out, strategy.d_anc
    if strategy.probe.shape != (di * da,):
        raise ValueError(f"probe length {strategy.probe.size} does not match {di} x {da}")
    if strategy.povm[0].shape != (do * da,) * 2:
        raise ValueError(f"POVM dimension {strategy.povm[0].shape[0]} does not match {do} x {da}")
    c = strategy.probe.reshape(di, da)
    W = []
    for M in strategy.povm:
        M4 = M.reshape(do, da, do, da)  # b l a k
        W.append(np.einsum("ik,jl,blak->iajb", c, c.conj(), M4))
    return np.array(W)


class _Likelihood:
    def __init__(self, family: ChannelFamily, strategy: Strategy):
        self.family = family
        self.W = _response(family, strategy)
        shape = (family.d_in, family.d_out, family.d_in, family.d_out)
        self._shape = shape

    def probs(self, theta: float) -> np.ndarray:
        try:
            C = self.family.choi_fn(float(theta)).reshape(self._shape)
        except ValueError:
            return np.full(len(self.W), np.nan)
        return np.real(np.tensordot(self.W, C, axes=4))

    def dprobs(self, theta: float) -> np.ndarray:
        if self.family.dchoi_fn is None:
            h = 1e-5
            return (self.probs(theta + h) - self.probs(theta - h)) / (2 * h)
        D = self.family.dchoi_fn(float(theta)).reshape(self._shape)
        return np.real(np.tensordot(self.W, D, axes=4))

    @staticmethod
    def loglik(counts: np.ndarray, p: np.ndarray) -> float:
        if np.any(np.isnan(p)):
            return -math.inf
        used = counts > 0
        if np.any(p[used] <= 0):
            return -math.inf
        return float(counts[used] @ np.log(p[used]))


def outcome_distribution(family: ChannelFamily, theta: float, strategy: Strategy) -> tuple[np.ndarray, np.ndarray]:
    """Outcome probabilities ``p`` and their theta-derivative ``d`` for one channel use."""
    lik = _Likelihood(family, strategy)
    p = lik.probs(theta)
    if np.any(np.isnan(p)):
        raise ValueError(f"theta={theta} is outside the family's valid range")
    return p, lik.dprobs(theta)


@dataclass
class TrialResult:
    n_uses: int
    trials: int
    theta_true: float
    estimates: np.ndarray = field(repr=False)
    mean: float
    mse: float
    n_times_mse: float
    clipped: int = 0
    failed: int = 0


def _interval(family: ChannelFamily, theta: float, window: float) -> tuple[float, float]:
    lo, hi = family.domain
    return max(theta - window, lo), min(theta + window, hi)


def _golden(fn, a: float, b: float, tol: float) -> float:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _newton(lik: _Likelihood, counts, theta, lo, hi, tol, max_iter=50):
    def score(t):
        p = lik.probs(t)
        used = counts > 0
        return float(counts[used] @ (lik.dprobs(t)[used] / p[used]))

    for _ in range(max_iter):
        s = score(theta)
        h = 1e-6
        ds = (score(theta + h) - score(theta - h)) / (2 * h)
        if not np.isfinite(ds) or ds >= 0:
            return None
        step = s / ds
        theta = theta - step
        if not lo <= theta <= hi:
            return None
        if abs(step) < tol:
            return theta
    return None


def _mle(lik: _Likelihood, counts, grid, grid_ll, lo, hi, strategy: Strategy):
    """Returns ``(estimate, clipped)``; ``estimate`` is None on failure."""
    ll = grid_ll
    k = int(np.argmax(ll))
    if not np.isfinite(ll[k]):
        return None, False
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    est = _golden(lambda t: lik.loglik(counts, lik.probs(t)), a, b, strategy.resolution)
    if strategy.estimator == "mle_newton":
        refined = _newton(lik, counts, est, lo, hi, strategy.resolution)
        if refined is None:
            return None, False
        est = refined
    clipped = est - lo <= strategy.resolution or hi - est <= strategy.resolution
    return est, clipped


def run_trials(
    family: ChannelFamily,
    theta_true: float,
    strategy: Strategy,
    n_uses: int,
    trials: int,
    seed=0,
    grid_points: int = 401,
) -> TrialResult:
    """Sample outcome counts for ``trials`` experiments and estimate theta in each."""
    if trials < 1 or n_uses < 1:
        raise ValueError("trials and n_uses must be positive")
    lik = _Likelihood(family, strategy)
    p0 = lik.probs(theta_true)
    if np.any(np.isnan(p0)):
        raise ValueError(f"theta={theta_true} is outside the family's valid range")
    if classical_fisher(np.clip(p0, 0, None), lik.dprobs(theta_true)) <= 1e-12:
        raise DegenerateStrategy(f"strategy {strategy.name!r} has zero Fisher information at theta={theta_true}")
    p0 = np.clip(p0, 0, None)
    p0 = p0 / p0.sum()

    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_uses, p0, size=trials)

    lo, hi = _interval(family, theta_true, strategy.window)
    grid = np.linspace(lo, hi, grid_points)
    P = np.array([lik.probs(t) for t in grid])  # grid x outcomes
    with np.errstate(divide="ignore", invalid="ignore"):
        logP = np.where(P > 0, np.log(np.where(P > 0, P, 1.0)), -np.inf)
    logP[np.isnan(P).any(axis=1)] = -np.inf

    uniq, inverse = np.unique(counts, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    solved = []
    for row in uniq:
        used = row > 0
        ll = logP[:, used] @ row[used] if np.any(used) else np.zeros(len(grid))
        solved.append(_mle(lik, row, grid, ll, lo, hi, strategy))
    est = np.array([np.nan if s[0] is None else s[0] for s in solved])[inverse]
    clipped = int(sum(solved[i][1] for i in inverse))
    ok = ~np.isnan(est)
    good = est[ok]
    if good.size == 0:
        raise DegenerateStrategy("maximum-likelihood estimation failed in every trial")
    mse = float(np.mean((good - theta_true) ** 2))
    return TrialResult(
        n_uses=n_uses,
        trials=trials,
        theta_true=float(theta_true),
        estimates=est,
        mean=float(np.mean(good)),
        mse=mse,
        n_times_mse=n_uses * mse,
        clipped=clipped,
        failed=int((~ok).sum()),
    )


@dataclass
class RateReport:
    rows: list[TrialResult]
    slope: float
    cr_floor: float

    @property
    def n_list(self) -> list[int]:
        return [r.n_uses for r in self.rows]

    @property
    def n_mse(self) -> list[float]:
        return [r.n_times_mse for r in self.rows]


def rate_scan(
    family: ChannelFamily,
    theta_true: float,
    strategy: Strategy,
    n_list: Sequence[int],
    trials: int,
    seed: int = 0,
    g_min_value: float | None = None,
) -> RateReport:
    """MSE against ``n`` with the fitted log-log slope and the Cramer-Rao floor ``1/g_min``."""
    n_list = [int(n) for n in n_list]
    if n_list != sorted(n_list) or len(set(n_list)) != len(n_list):
        raise ValueError("n_list must be strictly ascending")
    seeds = np.random.SeedSequence(seed).spawn(len(n_list))
    rows = [run_trials(family, theta_true, strategy, n, trials, s) for n, s in zip(n_list, seeds)]
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log(n_list), np.log([r.mse for r in rows]), 1)[0])
    else:
        slope = math.nan
    if g_min_value is None:
        phi, delta = family.local(theta_true)
        g_min_value = g_min(phi, delta).value
    floor = 0.0 if math.isinf(g_min_value) else 1.0 / g_min_value
    return RateReport(rows, slope, floor)
