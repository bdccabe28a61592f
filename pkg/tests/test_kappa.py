import numpy as np
import pytest
from scipy.integrate import quad

from ncssa.algebra import full_algebra, partial_trace
from ncssa.channels import identity_channel, random_channel, random_state, trace_channel
from ncssa.inclusions import InclusionError, tensor_factor_inclusion
from ncssa.instances import build_dpi_instance, build_improved_dpi_instance, build_petz_instance
from ncssa.kappa import (
    KappaProblem,
    StateExpectation,
    alpha,
    c_of_t,
    factor_expectation,
    kappa,
    quadrature_rule,
    trivial_expectation,
)


def _problem(inst):
    return KappaProblem(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation)


def test_alpha_is_a_density():
    total, err = quad(alpha, -np.inf, np.inf, epsabs=1e-13)
    assert total == pytest.approx(1.0, abs=1e-10)
    assert alpha(0.0) == pytest.approx(np.pi / 4)
    assert alpha(-1.3) == alpha(1.3)
    assert np.isfinite(alpha(1e4)) and alpha(1e4) >= 0


@pytest.mark.parametrize("T", [4.0, 8.0])
@pytest.mark.parametrize("h", [1.0, 0.5, 0.25])
def test_quadrature_weights_sum(T, h):
    t, w = quadrature_rule(T, h, 16)
    assert w.sum() == pytest.approx(np.tanh(np.pi * T / 2), abs=1e-10)
    assert t.min() > -T and t.max() < T


def test_quadrature_weights_total_mass():
    _, w = quadrature_rule(8.0, 0.5, 16)
    assert abs(w.sum() - 1.0) <= 1e-10


def test_quadrature_rejects_bad_panels():
    with pytest.raises(ValueError):
        quadrature_rule(1.0, 0.3)


@pytest.mark.parametrize("seed", range(3))
def test_dpi_preset_has_constant_one(seed):
    P = _problem(build_dpi_instance(seed))
    assert all(P.c(t) == pytest.approx(1.0, abs=1e-10) for t in (-3.0, 0.0, 0.7, 5.0))


@pytest.mark.parametrize("seed", range(3))
def test_improved_dpi_constant_at_most_one(seed):
    P = _problem(build_improved_dpi_instance(seed))
    assert all(P.c(t) <= 1.0 + 1e-12 for t in np.linspace(-6, 6, 13))


def test_identity_channel_equal_states():
    # t = 0, Phi_A = id, rho = sigma: Y = 1 and W = Phi_B(sigma), so c = 1
    rho = random_state(3, seed=1)
    phi_b = random_channel(3, 2, 2, 2)
    E = trivial_expectation(phi_b(rho).herm())
    for t in (0.0, 1.5):
        assert c_of_t(t, rho, rho, identity_channel(full_algebra(3)), phi_b, E) == pytest.approx(1.0, abs=1e-10)


def test_c_against_cvxpy_for_factor_expectation():
    cp = pytest.importorskip("cvxpy")
    inst = build_petz_instance(3)
    P = _problem(inst)
    W = P.W(0.8).matrix
    # E^dagger(b) = tr_1((1 (x) w_1) b) onto the first factor of B
    w_other = partial_trace(inst.expectation.state.matrix, (2, 2), (1,))
    G = np.kron(np.eye(2), w_other) @ (b := cp.Variable((4, 4), hermitian=True))
    cons = [b >> 0] + [sum(G[2 * i + k, 2 * j + k] for k in range(2)) == float(i == j)
                       for i in range(2) for j in range(2)]
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(b @ W))), cons)
    prob.solve(solver="CLARABEL")
    assert P.c(0.8) == pytest.approx(prob.value, abs=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_kappa_improved_dpi_non_positive(seed):
    inst = build_improved_dpi_instance(seed)
    res = kappa(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation)
    assert res.kappa <= 1e-8
    assert res.converged
    assert res.quadrature_error_estimate < 1e-8


def test_kappa_unitary_is_zero():
    inst = build_improved_dpi_instance(4, unitary=True)
    res = kappa(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation)
    assert abs(res.kappa) <= 1e-6


def test_kappa_dpi_is_zero():
    inst = build_dpi_instance(5)
    res = kappa(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation)
    assert abs(res.kappa) <= 1e-12
    assert res.quadrature_error_estimate < 1e-10


def test_kappa_refinement_stable():
    inst = build_improved_dpi_instance(6)
    args = (inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation)
    coarse = kappa(*args, panel_width=1.0, max_refinements=0).kappa
    fine = kappa(*args, panel_width=0.5, max_refinements=0).kappa
    assert abs(coarse - fine) < 1e-8


def test_kappa_samples_and_diagnostics():
    inst = build_improved_dpi_instance(7)
    res = kappa(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation)
    t, c, w = map(np.array, zip(*res.samples))
    assert np.sum(w * np.log(c)) == pytest.approx(res.kappa, abs=1e-14)
    assert res.diagnostics["weight_sum"] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.slow
def test_kappa_petz_zero():
    inst = build_petz_instance(0)
    res = kappa(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation,
                panel_width=1.0, max_refinements=0)
    assert abs(res.kappa) <= 1e-6


def test_petz_constant_one_at_samples():
    P = _problem(build_petz_instance(1))
    for t in (0.0, 2.0):
        assert P.c(t) == pytest.approx(1.0, abs=1e-7)


def test_support_violation_raises():
    rho = full_algebra(2).element([np.eye(2) / 2])
    sigma = full_algebra(2).element([np.diag([1.0, 0.0])])
    idc = identity_channel(full_algebra(2))
    tr = trace_channel(full_algebra(2))
    with pytest.raises(ValueError):
        kappa(rho, sigma, idc, tr, trivial_expectation(tr(sigma).herm()))


def test_expectation_must_preserve_phi_b_sigma():
    inst = build_improved_dpi_instance(0)
    wrong = trivial_expectation(full_algebra(1).element([np.eye(1)]))
    P = KappaProblem(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, wrong)
    assert P.c(0.0) > 0
    dpi = build_dpi_instance(0)
    other = trivial_expectation(full_algebra(2).maximally_mixed())
    with pytest.raises(ValueError):
        KappaProblem(dpi.rho, dpi.sigma, dpi.phi_a, dpi.phi_b, other)


def test_state_expectation_validation():
    w = np.kron(random_state(2, seed=1).matrix, random_state(2, seed=2).matrix)
    E = factor_expectation((2, 2), 0, w)
    assert E.adjoint_map(full_algebra(4).element([w])).distance(full_algebra(4).element([w])) < 1e-10
    # entangled state is not preserved by the product-form expectation
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    with pytest.raises(InclusionError):
        factor_expectation((2, 2), 0, 0.9 * np.outer(v, v) + 0.1 * np.eye(4) / 4)
    inc = tensor_factor_inclusion((2, 2), (0,))
    with pytest.raises(ValueError):
        StateExpectation(inc, identity_channel(full_algebra(4)), w)
    with pytest.raises(ValueError):
        factor_expectation((2, 2, 2), 0, np.eye(8) / 8)
