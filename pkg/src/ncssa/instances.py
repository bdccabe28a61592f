"""Structured and random problem instances with known constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgElement, full_algebra
from .channels import (
    Channel,
    Povm,
    partial_trace_channel,
    random_channel,
    random_state,
    random_unitary,
    rng_from,
    trace_channel,
    unitary_channel,
)
from .inclusions import (
    conjugate_inclusion,
    diagonal_inclusion,
    tensor_factor_inclusion,
    trivial_inclusion,
)
from .kappa import StateExpectation, factor_expectation, trivial_expectation

__all__ = [
    "is_prime",
    "fourier_matrix",
    "build_mub_instance",
    "build_partial_trace_instance",
    "build_commuting_square",
    "RelativeEntropyInstance",
    "build_petz_instance",
    "build_dpi_instance",
    "build_improved_dpi_instance",
    "random_subalgebra_pair",
    "random_theorem_a_instance",
    "random_theorem_b_instance",
]


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    return all(n % k for k in range(2, int(np.sqrt(n)) + 1))


def fourier_matrix(d: int) -> np.ndarray:
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def build_mub_instance(d: int) -> tuple[Povm, Povm]:
    """Computational and Fourier basis measurements on ``C^d`` (``d`` prime).

    For ``d = 2`` the Fourier basis is the Hadamard basis.
    """
    if not is_prime(d):
        raise ValueError(f"d = {d} is not prime")
    return Povm.from_basis(np.eye(d)), Povm.from_basis(fourier_matrix(d))


def build_partial_trace_instance(d_a: int, d_b: int) -> tuple[Channel, Channel]:
    """``Phi_A = tr_B`` and ``Phi_B = tr_A`` on ``B(H_A (x) H_B)``."""
    return (partial_trace_channel((d_a, d_b), (0,)), partial_trace_channel((d_a, d_b), (1,)))


def build_commuting_square(kind: str = "tensor", d: int = 2):
    """Subalgebras ``R in A, B in M`` forming a commuting square, induced traces.

    ``kind`` is ``"tensor"`` (``M_d (x) M_d`` with its two factors, ``R = C``),
    ``"mub"`` (diagonal and Fourier-diagonal of ``M_d``, ``R = C``) or
    ``"petz"`` (``M_2^{(x)3}`` with ``A = B(H_12)``, ``B = B(H_23)``,
    ``R = B(H_2)``).  Returns ``(A_inc, B_inc, R_inc)`` as inclusions into ``M``.
    """
    if kind == "tensor":
        dims = (d, d)
        a = tensor_factor_inclusion(dims, (0,)).with_induced_trace()
        b = tensor_factor_inclusion(dims, (1,)).with_induced_trace()
        r = trivial_inclusion(a.ambient, float(d * d))
    elif kind == "mub":
        if not is_prime(d):
            raise ValueError(f"d = {d} is not prime")
        a = diagonal_inclusion(d)
        b = conjugate_inclusion(a, fourier_matrix(d))
        r = trivial_inclusion(a.ambient, float(d))
    elif kind == "petz":
        dims = (d, d, d)
        a = tensor_factor_inclusion(dims, (0, 1)).with_induced_trace()
        b = tensor_factor_inclusion(dims, (1, 2)).with_induced_trace()
        r = tensor_factor_inclusion(dims, (1,)).with_induced_trace()
    else:
        raise ValueError(f"unknown commuting-square kind {kind!r}")
    return a, b, r


def random_subalgebra_pair(seed=None, d: int | None = None, kind: str | None = None):
    """Random pair of subalgebras of a full matrix algebra with ``R = C``.

    ``kind`` is ``"generic"`` (independent Haar rotations of the diagonal),
    ``"mub"`` or ``"tensor"`` (commuting squares rotated by one common Haar
    unitary).  Returns ``(A_inc, B_inc, R_inc, kind)``.
    """
    rng = rng_from(seed)
    if kind is None:
        kind = ["generic", "generic", "mub", "tensor"][int(rng.integers(4))]
    if kind == "generic":
        d = d or int(rng.choice([2, 3]))
        base = diagonal_inclusion(d)
        a = conjugate_inclusion(base, random_unitary(d, rng))
        b = conjugate_inclusion(base, random_unitary(d, rng))
        return a, b, trivial_inclusion(a.ambient, float(d)), kind
    if kind == "mub":
        d = d or int(rng.choice([2, 3]))
        a, b, r = build_commuting_square("mub", d)
    elif kind == "tensor":
        d = d or 2
        a, b, r = build_commuting_square("tensor", d)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    U = random_unitary(a.ambient.dims[0], rng)
    return conjugate_inclusion(a, U), conjugate_inclusion(b, U), r, kind


def random_theorem_a_instance(seed=None, dims=None):
    """Random ``(rho_MC, Phi_A, Phi_B, d_C)`` with Stinespring channels.

    ``dims = (d_M, d_A, d_B, d_C)``; when omitted each is drawn from
    ``{1, 2, 3}`` (with ``d_M >= 2``).
    """
    rng = rng_from(seed)
    if dims is None:
        d_m = int(rng.integers(2, 4))
        d_a, d_b, d_c = (int(v) for v in rng.integers(1, 4, size=3))
    else:
        d_m, d_a, d_b, d_c = (int(v) for v in dims)
    env_a = int(np.ceil(d_m / d_a)) + int(rng.integers(0, 2))
    env_b = int(np.ceil(d_m / d_b)) + int(rng.integers(0, 2))
    phi_a = random_channel(d_m, d_a, env_a, rng)
    phi_b = random_channel(d_m, d_b, env_b, rng)
    rank = int(rng.integers(1, d_m * d_c + 1))
    rho = random_state(d_m * d_c, rank=rank, seed=rng).matrix
    return rho, phi_a, phi_b, d_c


def random_theorem_b_instance(seed=None, dims=(3, 2, 2)):
    """Random ``(rho, Phi_A, Phi_B)`` on ``M_{d_M}`` with ``dims = (d_M, d_A, d_B)``."""
    rng = rng_from(seed)
    d_m, d_a, d_b = (int(v) for v in dims)
    phi_a = random_channel(d_m, d_a, int(np.ceil(d_m / d_a)) + 1, rng)
    phi_b = random_channel(d_m, d_b, int(np.ceil(d_m / d_b)) + 1, rng)
    rho = random_state(d_m, rank=int(rng.integers(1, d_m + 1)), seed=rng)
    return rho, phi_a, phi_b


@dataclass
class RelativeEntropyInstance:
    """Inputs of the relative-entropy inequality: states and channels on ``M``."""

    rho: AlgElement
    sigma: AlgElement
    phi_a: Channel
    phi_b: Channel
    expectation: StateExpectation


def build_petz_instance(seed=None, d: int = 2) -> RelativeEntropyInstance:
    """Three-party instance where ``c(t) = 1`` and ``kappa = 0``.

    ``M = B(H_1 (x) H_2 (x) H_3)``, ``Phi_A = tr_3``, ``Phi_B = tr_1``,
    ``sigma = sigma_12 (x) 1/d`` and ``E_R^dagger`` the normalized partial
    trace of ``B(H_23)`` onto ``B(H_2)``.
    """
    rng = rng_from(seed)
    rho = random_state(d ** 3, seed=rng)
    s12 = random_state(d * d, seed=rng).matrix
    sigma = full_algebra(d ** 3).element([np.kron(s12, np.eye(d) / d)])
    phi_a = partial_trace_channel((d, d, d), (0, 1))
    phi_b = partial_trace_channel((d, d, d), (1, 2))
    E = factor_expectation((d, d), 0, phi_b(sigma).herm())
    return RelativeEntropyInstance(rho, sigma, phi_a, phi_b, E)


def build_dpi_instance(seed=None, d_m: int = 3, d_b: int = 2, env: int = 2) -> RelativeEntropyInstance:
    """``A = R = C``: the inequality is data processing for ``Phi_B`` and ``c(t) = 1``."""
    rng = rng_from(seed)
    rho, sigma = random_state(d_m, seed=rng), random_state(d_m, seed=rng)
    phi_b = random_channel(d_m, d_b, env, rng)
    phi_a = trace_channel(full_algebra(d_m))
    return RelativeEntropyInstance(rho, sigma, phi_a, phi_b, trivial_expectation(phi_b(sigma).herm()))


def build_improved_dpi_instance(seed=None, d_m: int = 3, d_a: int = 2, env: int = 2,
                                unitary: bool = False) -> RelativeEntropyInstance:
    """``B = R = C``: improved data processing for ``Phi_A`` with ``kappa <= 0``.

    With ``unitary=True`` ``Phi_A`` is a Haar unitary conjugation and ``kappa = 0``.
    """
    rng = rng_from(seed)
    rho, sigma = random_state(d_m, seed=rng), random_state(d_m, seed=rng)
    if unitary:
        phi_a = unitary_channel(random_unitary(d_m, rng))
    else:
        phi_a = random_channel(d_m, d_a, env, rng)
    phi_b = trace_channel(full_algebra(d_m))
    return RelativeEntropyInstance(rho, sigma, phi_a, phi_b, trivial_expectation(phi_b(sigma).herm()))
