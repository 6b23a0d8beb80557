import numpy as np
import pytest

from chanmetric.channels import bitflip_family, family_catalog, pauli_family
from chanmetric.estim import (
    DegenerateStrategy, Strategy, bell_phase_strategy, bell_strategy, computational_strategy,
    outcome_distribution, rate_scan, run_trials, trivial_strategy,
)
from chanmetric.metrics import cp_ball_radius, g_min
from chanmetric.states import classical_fisher


def test_strategy_validation():
    with pytest.raises(ValueError):
        Strategy(np.array([1.0, 1.0]), [np.eye(2)])
    with pytest.raises(ValueError):
        Strategy(np.array([1.0, 0.0]), [np.diag([1.0, 0.0])])
    with pytest.raises(ValueError):
        Strategy(np.array([1.0, 0.0]), [np.eye(2)], estimator="bayes")


def test_outcome_distribution_examples():
    p, d = outcome_distribution(bitflip_family(), 0.1, computational_strategy())
    assert np.allclose(p, [0.9, 0.1]) and np.allclose(d, [-1, 1])
    fam = pauli_family((0.1,), (0.05, 0.5), (0.02,))
    theta = 0.2
    p, d = outcome_distribution(fam, theta, bell_strategy())
    q, dq = fam.pauli_probabilities(theta)
    # Bell states 1..4 are I, X, Y, Z applied to Bell1 (up to phase)
    assert np.allclose(p, q) and np.allclose(d, dq)


def test_outcome_derivative_sums_to_zero():
    rng = np.random.default_rng(0)
    fam = family_catalog("depolarized_phase", {"r": 0.1})
    for strat in (bell_strategy(), bell_phase_strategy(), computational_strategy()):
        _, d = outcome_distribution(fam, rng.uniform(-1, 1), strat)
        assert abs(d.sum()) < 1e-12


def test_outcome_derivative_matches_finite_difference():
    fam = family_catalog("depolarized_phase", {"r": 0.1})
    h = 1e-6
    _, d = outcome_distribution(fam, 0.3, bell_phase_strategy())
    fd = (outcome_distribution(fam, 0.3 + h, bell_phase_strategy())[0]
          - outcome_distribution(fam, 0.3 - h, bell_phase_strategy())[0]) / (2 * h)
    assert np.allclose(d, fd, atol=1e-8)


def test_single_trial_estimate_in_range():
    res = run_trials(bitflip_family(), 0.1, computational_strategy(), n_uses=1, trials=1, seed=0)
    assert 0.0 <= res.estimates[0] <= 0.6
    assert res.trials == 1 and res.mse >= 0


def test_bitflip_cramer_rao_and_unbiasedness():
    res = run_trials(bitflip_family(), 0.1, computational_strategy(), n_uses=1000, trials=2000, seed=7)
    assert 0.85 * 0.09 <= res.n_times_mse <= 1.15 * 0.09
    assert abs(res.mean - 0.1) <= 3 * np.sqrt(res.mse / res.trials)
    assert res.failed == 0


def test_determinism():
    args = (bitflip_family(), 0.1, bell_strategy(), 500, 200)
    a = run_trials(*args, seed=3)
    b = run_trials(*args, seed=3)
    assert np.array_equal(a.estimates, b.estimates)
    assert (a.mse, a.mean) == (b.mse, b.mean)
    c = run_trials(*args, seed=4)
    assert not np.array_equal(a.estimates, c.estimates)


def test_newton_refinement_agrees_with_grid():
    fam = bitflip_family()
    a = run_trials(fam, 0.1, computational_strategy(), 1000, 100, seed=1)
    b = run_trials(fam, 0.1, computational_strategy(estimator="mle_newton"), 1000, 100, seed=1)
    assert np.allclose(a.estimates, b.estimates, atol=1e-5)


def test_empirical_frequencies_converge():
    # binomial MLE on the computational readout is the empirical frequency itself
    n = 2000
    fam = bitflip_family()
    p, _ = outcome_distribution(fam, 0.1, computational_strategy())
    res = run_trials(fam, 0.1, computational_strategy(), n, 50, seed=5)
    for est in res.estimates:
        p_hat = np.array([1 - est, est])
        assert np.abs(p_hat - p).sum() <= 5 * np.sqrt(len(p) / n)
    rng = np.random.default_rng(5)
    counts = rng.multinomial(n, [0.4, 0.3, 0.2, 0.1], size=20)
    assert np.all(np.abs(counts / n - [0.4, 0.3, 0.2, 0.1]).sum(axis=1) <= 5 * np.sqrt(4 / n))


def test_degenerate_strategy():
    with pytest.raises(DegenerateStrategy):
        run_trials(bitflip_family(), 0.1, trivial_strategy(), 100, 10)
    with pytest.raises(DegenerateStrategy):
        rate_scan(bitflip_family(), 0.1, trivial_strategy(), [100, 200], 10)


def test_rate_scan_bitflip():
    rep = rate_scan(bitflip_family(), 0.1, bell_strategy(), [250, 500, 1000, 2000], 2000, seed=7)
    assert rep.slope == pytest.approx(-1.0, abs=0.15)
    assert rep.cr_floor == pytest.approx(0.09, rel=1e-6)
    assert all(v >= 0.9 * 0.09 for v in rep.n_mse)
    assert rep.n_list == [250, 500, 1000, 2000]
    with pytest.raises(ValueError):
        rate_scan(bitflip_family(), 0.1, bell_strategy(), [500, 250], 10)


def test_rate_scan_depolarized_phase_floor():
    fam = family_catalog("depolarized_phase", {"r": 0.1})
    phi, delta = fam.local(0.0)
    floor = cp_ball_radius(phi, delta) ** 2 * (1 - 0.1)
    rep = rate_scan(fam, 0.0, bell_phase_strategy(), [250, 500, 1000, 2000], 1000, seed=7)
    assert all(v >= floor for v in rep.n_mse)
    assert rep.slope == pytest.approx(-1.0, abs=0.15)


def test_n_mse_above_cramer_rao_for_catalog_runs():
    cases = [
        (bitflip_family(), 0.1, computational_strategy()),
        (bitflip_family(), 0.3, bell_strategy()),
        (family_catalog("depolarized_phase", {"r": 0.1}), 0.0, bell_phase_strategy()),
        (family_catalog("classical_finite"), 0.2, computational_strategy()),
    ]
    for fam, theta, strat in cases:
        gm = g_min(*fam.local(theta)).value
        res = run_trials(fam, theta, strat, 1000, 1000, seed=11)
        assert res.n_times_mse >= 0.85 / gm


def test_strategy_information_matches_g_min_for_bell():
    fam = bitflip_family()
    p, d = outcome_distribution(fam, 0.1, bell_strategy())
    assert classical_fisher(p, d) == pytest.approx(g_min(*fam.local(0.1)).value, rel=1e-8)
