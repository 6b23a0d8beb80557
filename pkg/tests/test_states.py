import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanmetric.channels import apply, random_family
from chanmetric.linalg import X, Z
from chanmetric.states import (
    as_density, as_povm, as_prob_vector, as_signed_vector, as_tangent, classical_fisher,
    measured_fisher, rld_fisher, sld, sld_fisher,
)

seeds = st.integers(0, 2**32 - 1)


def rand_pair(rng, d):
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = G @ G.conj().T + 1e-3 * np.eye(d)
    rho /= np.trace(rho).real
    H = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    delta = (H + H.conj().T) / 2
    delta -= np.trace(delta) / d * np.eye(d)
    return rho, delta


def rand_projective(rng, d):
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return [np.outer(Q[:, k], Q[:, k].conj()) for k in range(d)]


def test_validators():
    with pytest.raises(ValueError):
        as_density(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        as_density(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        as_tangent(np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        as_prob_vector([0.5, 0.6])
    with pytest.raises(ValueError):
        as_prob_vector([1.1, -0.1])
    with pytest.raises(ValueError):
        as_signed_vector([0.1, 0.0])
    with pytest.raises(ValueError):
        as_povm([np.diag([1.0, 0.0])])
    with pytest.raises(ValueError):
        as_povm([np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])])


def test_classical_fisher_examples():
    assert classical_fisher([0.5, 0.5], [0.5, -0.5]) == pytest.approx(1.0)
    assert classical_fisher([1, 0], [0, 0]) == 0
    assert classical_fisher([0.9, 0.1, 0, 0], [-1, 1, 0, 0]) == pytest.approx(1 / 0.9 + 1 / 0.1)
    assert classical_fisher([1, 0], [-1, 1]) == math.inf
    with pytest.raises(ValueError):
        classical_fisher([0.5, 0.5], [0, 0, 0])


def test_sld_examples():
    assert np.allclose(sld(np.eye(2) / 2, Z / 2), Z)
    assert np.allclose(sld(np.diag([0.9, 0.1]), X), 2 * X)
    p = 0.3
    assert np.allclose(sld(np.diag([p, 1 - p]), np.diag([1.0, -1.0])), np.diag([1 / p, -1 / (1 - p)]))


def test_sld_solves_defining_equation():
    rng = np.random.default_rng(0)
    rho, delta = rand_pair(rng, 3)
    L = sld(rho, delta)
    assert np.allclose(L, L.conj().T)
    assert np.linalg.norm((L @ rho + rho @ L) / 2 - delta) < 1e-9


def test_sld_fisher_examples():
    assert sld_fisher(np.eye(2) / 2, Z / 2) == pytest.approx(1.0)
    assert sld_fisher(np.diag([0.9, 0.1]), X) == pytest.approx(4.0)
    assert sld_fisher(np.diag([0.1, 0.9]), np.diag([1.0, -1.0])) == pytest.approx(1 / 0.1 + 1 / 0.9)


def test_support_escape_is_infinite():
    rho = np.diag([1.0, 0.0])
    # off-diagonal tangent on a pure state is a rotation: SLD finite, RLD infinite
    assert sld_fisher(rho, X) == pytest.approx(4.0)
    assert rld_fisher(rho, X) == math.inf
    # population flowing into the kernel diverges for both
    assert sld_fisher(rho, np.diag([-1.0, 1.0])) == math.inf
    assert rld_fisher(rho, np.diag([-1.0, 1.0])) == math.inf
    # tangent inside the support stays finite
    assert sld_fisher(rho, np.zeros((2, 2))) == 0
    with pytest.raises(ValueError):
        sld(rho, np.diag([-1.0, 1.0]))


def test_rld_fisher_examples():
    assert rld_fisher(np.eye(2) / 2, X / 2) == pytest.approx(1.0)
    assert rld_fisher(np.diag([0.9, 0.1]), X) == pytest.approx(10 + 1 / 0.9)
    p = 0.2
    assert rld_fisher(np.diag([p, 1 - p]), np.diag([1.0, -1.0])) == pytest.approx(1 / p + 1 / (1 - p))


def test_measured_fisher_examples():
    rho, delta = np.eye(2) / 2, Z / 2
    z_basis = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    plus = np.array([1, 1]) / np.sqrt(2)
    minus = np.array([1, -1]) / np.sqrt(2)
    x_basis = [np.outer(plus, plus), np.outer(minus, minus)]
    assert measured_fisher(rho, delta, z_basis) == pytest.approx(1.0)
    assert measured_fisher(rho, delta, x_basis) == pytest.approx(0.0, abs=1e-15)
    rng = np.random.default_rng(1)
    r, dl = rand_pair(rng, 3)
    assert measured_fisher(r, dl, [np.eye(3)]) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=500, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_sld_below_rld(seed, d):
    rho, delta = rand_pair(np.random.default_rng(seed), d)
    assert sld_fisher(rho, delta) <= rld_fisher(rho, delta) + 1e-8


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_commuting_collapse(seed, d):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(d))
    dv = rng.normal(size=d)
    dv -= dv.mean()
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    rho = Q @ np.diag(p) @ Q.conj().T
    delta = Q @ np.diag(dv) @ Q.conj().T
    J = classical_fisher(p, dv)
    assert sld_fisher(rho, delta) == pytest.approx(J, rel=1e-9)
    assert rld_fisher(rho, delta) == pytest.approx(J, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_nagaoka_bound(seed, d):
    rng = np.random.default_rng(seed)
    rho, delta = rand_pair(rng, d)
    assert measured_fisher(rho, delta, rand_projective(rng, d)) <= sld_fisher(rho, delta) + 1e-8


def test_measurement_in_sld_basis_attains_bound():
    rho, delta = rand_pair(np.random.default_rng(5), 3)
    _, V = np.linalg.eigh(sld(rho, delta))
    povm = [np.outer(V[:, k], V[:, k].conj()) for k in range(3)]
    assert measured_fisher(rho, delta, povm) == pytest.approx(sld_fisher(rho, delta), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([(2, 2), (2, 3), (3, 2)]))
def test_sld_monotone_under_channels(seed, dims):
    rng = np.random.default_rng(seed)
    d_in, d_out = dims
    rho, delta = rand_pair(rng, d_in)
    lam = random_family(d_in, d_out, rng).channel(0.0)
    assert sld_fisher(apply(lam, rho), apply(lam, delta)) <= sld_fisher(rho, delta) + 1e-8


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_quadratic_scaling(seed, c):
    rho, delta = rand_pair(np.random.default_rng(seed), 2)
    assert sld_fisher(rho, c * delta) == pytest.approx(c * c * sld_fisher(rho, delta), rel=1e-9)
