import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from ncssa.algebra import make_algebra, partial_trace
from ncssa.channels import random_channel, random_state
from ncssa.entropy import (
    conditional_entropy,
    kosaki_norm,
    relative_entropy,
    sandwiched_renyi_relative,
    schatten_norm,
    von_neumann_entropy,
)
from conftest import ginibre_state

LOG2 = np.log(2.0)


def bell():
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return np.outer(v, v)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_maximally_mixed_entropy(d):
    assert von_neumann_entropy(np.eye(d) / d) == pytest.approx(np.log(d), abs=1e-14)


def test_pure_and_scalar_entropy(rng):
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    v /= np.linalg.norm(v)
    assert abs(von_neumann_entropy(np.outer(v, v.conj()))) < 1e-12
    expected = -0.25 * np.log(0.25) - 0.75 * np.log(0.75)
    assert von_neumann_entropy(np.diag([0.25, 0.75])) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.5623351446188083)


def test_entropy_against_scipy(rng):
    rho = ginibre_state(4, rng)
    assert von_neumann_entropy(rho) == pytest.approx(-np.trace(rho @ sla.logm(rho)).real, abs=1e-10)


def test_weighted_entropy():
    # tau = 2 tr on M_2: the state 1/4 has entropy -2 tr(1/4 log 1/4) = log 4
    alg = make_algebra([(2, 2.0)])
    assert von_neumann_entropy(alg.maximally_mixed()) == pytest.approx(np.log(4))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 6), data=st.data())
def test_entropy_bounds(seed, d, data):
    rank = data.draw(st.integers(1, d))
    H = von_neumann_entropy(random_state(d, rank=rank, seed=seed))
    assert -1e-12 <= H <= np.log(d) + 1e-12


def test_conditional_entropy_examples(rng):
    ra, rb = ginibre_state(2, rng), ginibre_state(3, rng)
    assert conditional_entropy(np.kron(ra, rb), (2, 3)) == pytest.approx(von_neumann_entropy(ra))
    assert conditional_entropy(bell(), (2, 2)) == pytest.approx(-LOG2, abs=1e-12)
    rho = ginibre_state(6, rng)
    rho_b = np.einsum("abac->bc", rho.reshape(2, 3, 2, 3))
    oracle = -np.trace(rho @ sla.logm(rho)).real + np.trace(rho_b @ sla.logm(rho_b)).real
    assert conditional_entropy(rho, (2, 3)) == pytest.approx(oracle, abs=1e-10)


def test_relative_entropy_examples(rng):
    rho = ginibre_state(3, rng)
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert relative_entropy(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(LOG2)
    assert relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0])) == np.inf
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    assert relative_entropy(np.diag(p), np.diag(q)) == pytest.approx(np.sum(p * np.log(p / q)))


def test_relative_entropy_zero_iff_equal(rng):
    rho = ginibre_state(3, rng)
    for eps in [1e-2, 1e-4]:
        sigma = (1 - eps) * rho + eps * ginibre_state(3, rng)
        assert relative_entropy(rho, sigma) > 0
        assert np.abs(np.linalg.eigvalsh(rho - sigma)).sum() > 1e-8
    assert abs(relative_entropy(rho, rho.copy())) < 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_data_processing_property(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_state(3, seed=rng), random_state(3, seed=rng)
    phi = random_channel(3, 2, int(rng.integers(2, 4)), rng)
    assert relative_entropy(phi(rho), phi(sigma)) <= relative_entropy(rho, sigma) + 1e-9


def test_kosaki_examples(rng):
    rho = ginibre_state(3, rng, rank=2)
    sigma = 0.5 * rho + 0.5 * ginibre_state(3, rng, rank=2)
    s = sla.pinvh(sla.sqrtm(sigma), atol=1e-12)
    assert kosaki_norm(s @ rho @ s, sigma, 1) == pytest.approx(1.0, abs=1e-8)
    x = rng.standard_normal((3, 3))
    x = x + x.T
    assert kosaki_norm(x, ginibre_state(3, rng), np.inf) == pytest.approx(np.abs(np.linalg.eigvalsh(x)).max())
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    val = kosaki_norm(np.diag(p / q), np.diag(q), 2)
    assert val == pytest.approx(np.sqrt(np.sum(p ** 2 / q)))


def test_schatten(rng):
    x = rng.standard_normal((3, 3))
    s = np.linalg.svd(x, compute_uv=False)
    assert schatten_norm(x, 3) == pytest.approx(np.sum(s ** 3) ** (1 / 3))
    assert schatten_norm(x, np.inf) == pytest.approx(s.max())


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 5.0, np.inf])
def test_renyi_self_divergence(p, rng):
    rho = ginibre_state(3, rng)
    assert abs(sandwiched_renyi_relative(rho, rho, p)) < 1e-10


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_renyi_classical(p, rng):
    a, b = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    oracle = np.log(np.sum(a ** p * b ** (1 - p))) / (p - 1)
    assert sandwiched_renyi_relative(np.diag(a), np.diag(b), p) == pytest.approx(oracle)


def test_renyi_max_divergence(rng):
    rho, sigma = ginibre_state(3, rng), ginibre_state(3, rng)
    s = sla.fractional_matrix_power(sigma, -0.5)
    oracle = np.log(np.linalg.eigvalsh(s @ rho @ s).max())
    assert sandwiched_renyi_relative(rho, sigma, np.inf) == pytest.approx(oracle)


def test_renyi_limit(rng):
    rho, sigma = ginibre_state(3, rng), ginibre_state(3, rng)
    D = relative_entropy(rho, sigma)
    assert abs(sandwiched_renyi_relative(rho, sigma, 1 + 1e-4) - D) <= 1e-3


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_renyi_monotone_in_p(seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_state(3, seed=rng), random_state(3, seed=rng)
    vals = [sandwiched_renyi_relative(rho, sigma, p) for p in (1.0, 1.5, 2.0, 4.0, np.inf)]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_renyi_rejects_small_p():
    with pytest.raises(ValueError):
        sandwiched_renyi_relative(np.eye(2) / 2, np.eye(2) / 2, 0.5)
