import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncssa.algebra import full_algebra, make_algebra, partial_trace
from ncssa.channels import (
    Channel,
    Povm,
    channel_from_function,
    channel_from_kraus,
    compose,
    id_tensor,
    identity_channel,
    partial_trace_channel,
    povm_channel,
    random_channel,
    random_povm,
    random_state,
    random_unitary,
    tensor,
    trace_channel,
    unitary_channel,
)
from conftest import ginibre_state


def choi_norm(phi):
    return np.linalg.norm(phi.choi(), 2)


def test_identity_kraus_choi():
    phi = channel_from_kraus([np.eye(2)])
    omega = np.zeros(4)
    omega[[0, 3]] = 1
    assert np.allclose(phi.choi(), np.outer(omega, omega))
    assert phi.flags == {"cp": True, "tp": True, "unital": True}


def test_dephasing(rng):
    phi = channel_from_kraus([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    rho = ginibre_state(2, rng)
    assert np.allclose(phi(rho).matrix, np.diag(np.diag(rho)))


@pytest.mark.parametrize("seed", range(5))
def test_random_channel_is_cptp(seed):
    phi = random_channel(3, 2, 3, seed)
    assert phi.cp and phi.tp
    K = phi.kraus()
    assert np.allclose(sum(k.conj().T @ k for k in K), np.eye(3))
    assert np.linalg.eigvalsh(phi.choi()).min() > -1e-12


def test_non_cp_map_flagged():
    transpose = channel_from_function(full_algebra(2), full_algebra(2),
                                      lambda x: full_algebra(2).element([x.matrix.T]))
    assert transpose.tp and not transpose.cp


def test_adjoint_of_partial_trace(rng):
    phi = partial_trace_channel((2, 3), (0,))
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert np.allclose(phi.adjoint()(x).matrix, np.kron(x, np.eye(3)))


@pytest.mark.parametrize("blocks_in, blocks_out",
                         [([(2, 1.0)], [(3, 1.0)]), ([(2, 0.5), (1, 2.0)], [(2, 3.0), (2, 1.0)])])
def test_adjoint_bilinear_pairing(blocks_in, blocks_out, rng):
    # for arbitrary complex maps the adjoint is taken in tau(Phi(x) y) = tau(x Phi^dagger(y))
    A, B = make_algebra(blocks_in), make_algebra(blocks_out)
    phi = Channel(A, B, rng.standard_normal((B.total_dim, A.total_dim))
                  + 1j * rng.standard_normal((B.total_dim, A.total_dim)))
    adj = phi.adjoint()
    worst = 0.0
    for u in A.matrix_units():
        x = A.matrix_unit(*u)
        for v in B.matrix_units():
            y = B.matrix_unit(*v)
            lhs = (phi(x) @ y).trace()
            rhs = (x @ adj(y)).trace()
            worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-11
    assert adj.adjoint().distance(phi) < 1e-12


def test_random_cptp_adjoint_pairing(rng):
    phi = random_channel(2, 3, 2, rng)
    adj = phi.adjoint()
    A, B = phi.input, phi.output
    err = max(abs((phi(A.matrix_unit(*u)).adjoint() @ B.matrix_unit(*v)).trace()
                  - (A.matrix_unit(*u).adjoint() @ adj(B.matrix_unit(*v))).trace())
              for u in A.matrix_units() for v in B.matrix_units())
    assert err < 1e-11
    assert adj.unital


@pytest.mark.parametrize(
    "phi, expected",
    [
        (identity_channel(full_algebra(2)), 2.0),
        (channel_from_function(full_algebra(2), full_algebra(2),
                               lambda x: full_algebra(2).identity() * (x.trace() / 2)), 0.5),
        (compose(partial_trace_channel((2, 2), (1,)), partial_trace_channel((2, 2), (0,)).adjoint()),
         1.0),
    ],
)
def test_choi_norms(phi, expected):
    assert choi_norm(phi) == pytest.approx(expected, abs=1e-12)


def test_partial_trace_composition_choi_is_identity():
    phi = compose(partial_trace_channel((2, 2), (1,)), partial_trace_channel((2, 2), (0,)).adjoint())
    assert np.allclose(phi.choi(), np.eye(4))


def test_computational_measurement_is_dephasing(rng):
    phi = povm_channel(Povm.from_basis(np.eye(2)))
    rho = ginibre_state(2, rng)
    out = phi(rho)
    assert phi.output.is_commutative
    assert np.allclose([b[0, 0] for b in out.blocks], np.diag(rho))


def test_fourier_measurement_uniform_on_maximally_mixed():
    k = np.arange(3)
    F = np.exp(2j * np.pi * np.outer(k, k) / 3) / np.sqrt(3)
    out = povm_channel(Povm.from_basis(F))(np.eye(3) / 3)
    assert np.allclose([b[0, 0] for b in out.blocks], 1 / 3)


def test_random_povm_probabilities(rng):
    P = random_povm(2, 4, rng)
    for _ in range(20):
        p = P.probabilities(ginibre_state(2, rng))
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert p.min() > -1e-14


@pytest.mark.parametrize("effects", [
    (np.diag([1.0, 0.0]),),
    (np.diag([1.0, 0.5]), np.diag([0.0, 0.5]), np.diag([0.0, 0.1])),
    (np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])),
])
def test_invalid_povm(effects):
    with pytest.raises(ValueError):
        Povm(2, effects)


def test_compose_identity(rng):
    phi = random_channel(3, 2, 2, rng)
    assert compose(phi, identity_channel(phi.input)).distance(phi) < 1e-14
    assert compose(identity_channel(phi.output), phi).distance(phi) < 1e-14


def test_tensor_of_dephasings():
    deph = channel_from_kraus([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    big = tensor(deph, deph)
    oracle = channel_from_kraus([np.diag(e) for e in np.eye(4)])
    assert big.distance(oracle) < 1e-14


def test_tensor_matches_kron_on_products(rng):
    p1, p2 = random_channel(2, 3, 2, rng), random_channel(3, 2, 2, rng)
    r1, r2 = ginibre_state(2, rng), ginibre_state(3, rng)
    out = tensor(p1, p2)(np.kron(r1, r2)).matrix
    assert np.allclose(out, np.kron(p1(r1).matrix, p2(r2).matrix))


def test_id_tensor_partial_trace(rng):
    rho = ginibre_state(8, rng)
    phi = id_tensor(partial_trace_channel((2, 2), (0,)), 2)
    assert np.allclose(phi(rho).matrix, partial_trace(rho, (2, 2, 2), (0, 2)))


def test_unitary_channel_choi_norm(rng):
    U = random_unitary(3, rng)
    assert choi_norm(unitary_channel(U)) == pytest.approx(3.0)
    assert choi_norm(random_channel(3, 3, 1, rng)) == pytest.approx(3.0)


def test_trace_channel():
    alg = make_algebra([(2, 0.5), (1, 2.0)])
    phi = trace_channel(alg)
    assert phi.tp and phi.cp
    assert phi(alg.identity()).blocks[0][0, 0] == pytest.approx(alg.unit_trace)


def test_random_state_properties():
    rho = random_state(4, seed=0)
    assert rho.is_state() and np.linalg.eigvalsh(rho.matrix).min() > 0
    assert np.linalg.matrix_rank(random_state(4, rank=2, seed=0).matrix, tol=1e-10) == 2
    alg = make_algebra([(2, 0.5), (3, 1.0)])
    assert random_state(alg, seed=1).is_state()


def test_seed_reproducible():
    a, b = random_state(3, seed=42).matrix, random_state(3, seed=42).matrix
    assert a.tobytes() == b.tobytes()
    assert random_channel(3, 2, 2, 42).coord.tobytes() == random_channel(3, 2, 2, 42).coord.tobytes()


@settings(max_examples=25, deadline=None)
@given(d_in=st.integers(1, 3), d_out=st.integers(1, 3), extra=st.integers(0, 2),
       seed=st.integers(0, 2**31))
def test_random_channels_cptp_property(d_in, d_out, extra, seed):
    env = -(-d_in // d_out) + extra
    phi = random_channel(d_in, d_out, env, seed)
    assert phi.cp and phi.tp
    rho = random_state(d_in, seed=seed)
    assert phi(rho).is_state()
