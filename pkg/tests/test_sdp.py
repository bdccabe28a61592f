import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncssa.algebra import full_algebra, make_algebra, partial_trace
from ncssa.channels import random_state
from ncssa.inclusions import (
    diagonal_inclusion,
    identity_inclusion,
    tensor_factor_inclusion,
    trivial_inclusion,
)
from ncssa.norms import l1_inf_norm, linf_1_norm
from ncssa.sdp import expectation_constrained_max, hermitian_basis, solve_lmi

cp = pytest.importorskip("cvxpy")


def cvx_diagonal(x):
    y = cp.Variable(x.shape[0])
    prob = cp.Problem(cp.Minimize(cp.sum(y)), [cp.diag(y) - x >> 0])
    prob.solve(solver="CLARABEL")
    return prob.value


def cvx_left_factor(x, d_a, d_b):
    Y = cp.Variable((d_a, d_a), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(Y))), [cp.kron(Y, np.eye(d_b)) - x >> 0])
    prob.solve(solver="CLARABEL")
    return prob.value


@pytest.mark.parametrize("seed", range(4))
def test_l1_inf_diagonal_against_cvxpy(seed):
    x = random_state(3, seed=seed).matrix
    res = l1_inf_norm(x, diagonal_inclusion(3))
    assert res.value == pytest.approx(cvx_diagonal(x), abs=1e-6)
    assert res.gap <= 1e-7


@pytest.mark.parametrize("seed", range(4))
def test_l1_inf_tensor_factor_against_cvxpy(seed):
    x = random_state(4, rank=2, seed=seed).matrix
    res = l1_inf_norm(x, tensor_factor_inclusion((2, 2), (0,)))
    assert res.value == pytest.approx(cvx_left_factor(x, 2, 2), abs=1e-6)
    assert res.gap <= 1e-7


def test_l1_inf_identity_inclusion_is_trace():
    x = np.diag([0.5, 0.5])
    res = l1_inf_norm(x, identity_inclusion(full_algebra(2)))
    assert res.value == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("weight, expected", [(1.0, 1.0), (2.0, 2.0)])
def test_l1_inf_scalar_subalgebra(weight, expected):
    # inf{lam : x <= lam sigma, sigma a state of C1}; the state is 1/weight
    x = np.diag([1.0, 0.0])
    res = l1_inf_norm(x, trivial_inclusion(full_algebra(2), weight))
    assert res.value == pytest.approx(expected, abs=1e-12)
    lam = np.linspace(0, 3, 30001)
    feasible = lam[[np.linalg.eigvalsh(l * np.eye(2) / weight - x).min() >= -1e-12 for l in lam]]
    assert feasible.min() == pytest.approx(expected, abs=1e-4)


def test_witness_is_feasible_and_certifies(rng):
    inc = tensor_factor_inclusion((2, 3), (1,))
    x = random_state(6, seed=3)
    res = l1_inf_norm(x, inc)
    a = res.witness
    assert a.is_positive(1e-12)
    top = max(np.linalg.eigvalsh(b).max() for b in inc.cond_exp(a).herm().blocks)
    assert top <= 1 + 1e-12
    assert (a @ x).trace().real == pytest.approx(res.lower)
    # the primal Y is feasible: iota(Y) >= x
    slack = inc.embed(res.dual) - x
    assert min(np.linalg.eigvalsh(b).min() for b in slack.herm().blocks) > -1e-9


def test_unsupported_returns_infinity():
    alg = make_algebra([(2, 1.0), (1, 1.0)])
    F_sub = trivial_inclusion(alg, 1.0)
    # F: B -> C with F(b) = tau(b p) only sees the first block
    from ncssa.channels import Channel
    p = alg.element([np.eye(2), np.zeros((1, 1))])
    row = np.array([p.vec()]) * alg.coord_weights()[None, :]
    F = Channel(alg, F_sub.sub, row)
    x = alg.element([np.zeros((2, 2)), np.ones((1, 1))])
    assert expectation_constrained_max(x, F).value == np.inf


def test_zero_input():
    res = l1_inf_norm(np.zeros((2, 2)), diagonal_inclusion(2))
    assert res.value == 0.0


def test_hermitian_basis_orthonormal():
    alg = make_algebra([(2, 1.0), (1, 3.0)])
    B = np.array([g.vec() for g in hermitian_basis(alg)])
    assert np.allclose(B.conj() @ B.T, np.eye(alg.total_dim))
    assert all(g.is_hermitian() for g in hermitian_basis(alg))


def test_solve_lmi_scalar_problem():
    # minimize y subject to diag(y - 1, y - 2) >= 0
    F0 = [np.diag([-1.0, -2.0]).astype(complex)]
    Fi = [np.array([np.eye(2, dtype=complex)])]
    res = solve_lmi(np.array([1.0]), F0, Fi, np.array([5.0]))
    assert res.primal == pytest.approx(2.0, abs=1e-8)
    assert res.converged


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), kind=st.sampled_from(["diag", "left", "right"]))
def test_gap_certificate_property(seed, kind):
    inc = {"diag": diagonal_inclusion(3), "left": tensor_factor_inclusion((2, 2), (0,)),
           "right": tensor_factor_inclusion((2, 2), (1,))}[kind]
    d = inc.ambient.dims[0]
    rng = np.random.default_rng(seed)
    x = random_state(d, rank=int(rng.integers(1, d + 1)), seed=rng)
    res = l1_inf_norm(x, inc)
    assert res.lower <= res.value + 1e-12
    assert res.gap <= 1e-7
    # bounds: ||E_N(x)||-type lower bound and tau_N(lambda_max) upper bound
    assert res.value <= x.norm_op() * inc.sub.unit_trace + 1e-9


def test_linf_1_examples(rng):
    inc = tensor_factor_inclusion((2, 3), (0,))
    assert linf_1_norm(np.eye(6), inc) == pytest.approx(inc.weight.norm_op())
    x = random_state(2, seed=1).matrix
    assert linf_1_norm(x, trivial_inclusion(full_algebra(2), 1.0)) == pytest.approx(1.0)
    y = random_state(6, seed=2).matrix
    assert linf_1_norm(y, inc) == pytest.approx(np.linalg.eigvalsh(partial_trace(y, (2, 3), (0,))).max())
