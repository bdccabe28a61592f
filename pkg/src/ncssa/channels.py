"""Linear maps between algebras, stored as dense coordinate matrices.

Coordinates of an element are the row-major entries of its blocks,
concatenated in block order.  A :class:`Channel` from ``A`` to ``B`` is the
``(B.total_dim, A.total_dim)`` matrix acting on those coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    AlgElement,
    Algebra,
    as_element,
    diagonal_algebra,
    full_algebra,
    partial_trace,
    trivial_algebra,
)

__all__ = [
    "Channel",
    "Povm",
    "channel_from_kraus",
    "channel_from_function",
    "identity_channel",
    "unitary_channel",
    "partial_trace_channel",
    "trace_channel",
    "povm_channel",
    "compose",
    "tensor",
    "id_tensor",
    "adjoint",
    "choi_matrix",
    "classical_to_matrix",
    "as_full_output",
    "rng_from",
    "random_state",
    "random_unitary",
    "random_isometry",
    "random_channel",
    "random_povm",
    "CHANNEL_TOL",
]

CHANNEL_TOL = 1e-10


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class Channel:
    """Linear map ``Phi: input -> output`` between algebras.

    The ``cp``, ``tp`` and ``unital`` flags are computed lazily from the
    coordinate matrix and cached; instances are otherwise immutable.
    """

    def __init__(self, input: Algebra, output: Algebra, coord, *, tol: float = CHANNEL_TOL):
        coord = np.array(coord, dtype=complex)
        if coord.shape != (output.total_dim, input.total_dim):
            raise ValueError(
                f"coordinate matrix has shape {coord.shape}, expected "
                f"({output.total_dim}, {input.total_dim})")
        coord.setflags(write=False)
        self.input = input
        self.output = output
        self.coord = coord
        self.tol = tol

    def __repr__(self):
        return f"Channel({self.input.dims} -> {self.output.dims})"

    def __call__(self, x) -> AlgElement:
        x = as_element(x, self.input)
        return self.output.from_vec(self.coord @ x.vec())

    # flags -----------------------------------------------------------------
    @cached_property
    def tp(self) -> bool:
        t_in = _trace_functional(self.input)
        t_out = _trace_functional(self.output)
        return bool(np.max(np.abs(t_out @ self.coord - t_in)) <= self.tol)

    @cached_property
    def unital(self) -> bool:
        one_in = self.input.identity().vec()
        one_out = self.output.identity().vec()
        return bool(np.max(np.abs(self.coord @ one_in - one_out)) <= self.tol)

    @cached_property
    def cp(self) -> bool:
        for C in self.block_chois():
            C = (C + C.conj().T) / 2
            if C.size and np.linalg.eigvalsh(C).min() < -self.tol * max(1.0, np.abs(C).max()):
                return False
        return True

    @property
    def flags(self) -> dict:
        return {"cp": self.cp, "tp": self.tp, "unital": self.unital}

    # structure -------------------------------------------------------------
    def block_chois(self) -> list[np.ndarray]:
        """Choi matrices of every (input block, output block) restriction."""
        out = []
        for ko, di in zip(self.input.offsets, self.input.dims):
            for lo, do in zip(self.output.offsets, self.output.dims):
                sub = self.coord[lo:lo + do * do, ko:ko + di * di].reshape(do, do, di, di)
                out.append(sub.transpose(2, 0, 3, 1).reshape(di * do, di * do))
        return out

    def choi(self) -> np.ndarray:
        """``sum_ij e_ij (x) Phi(e_ij)`` for maps between full blocks."""
        if not (self.input.is_full and self.output.is_full):
            raise ValueError("Choi matrix requires single full-block input and output algebras")
        return self.block_chois()[0]

    def kraus(self, tol: float = 1e-12) -> list[np.ndarray]:
        """Kraus operators recovered from the Choi matrix (CP maps only)."""
        if not self.cp:
            raise ValueError("map is not completely positive")
        di, do = self.input.dims[0], self.output.dims[0]
        C = self.choi()
        ev, V = np.linalg.eigh((C + C.conj().T) / 2)
        return [np.sqrt(lam) * V[:, m].reshape(di, do).T
                for m, lam in enumerate(ev) if lam > tol * max(1.0, ev.max())]

    def adjoint(self) -> "Channel":
        """Adjoint with respect to the weighted trace pairings.

        Defined by ``tau_out(Phi(x) y) = tau_in(x Phi^dagger(y))``; for
        Hermiticity-preserving maps this is also the Hilbert-Schmidt adjoint.
        """
        p_in, p_out = self.input.transpose_perm(), self.output.transpose_perm()
        d_in, d_out = self.input.coord_weights(), self.output.coord_weights()
        M = (self.coord.T * d_out[None, :])[:, p_out]
        M = M[p_in, :] / d_in[:, None]
        return Channel(self.output, self.input, M, tol=self.tol)

    @property
    def H(self) -> "Channel":
        return self.adjoint()

    def compose(self, other: "Channel") -> "Channel":
        """``self o other``."""
        return compose(self, other)

    def distance(self, other: "Channel") -> float:
        if (self.input, self.output) != (other.input, other.output):
            raise ValueError("channels act between different algebras")
        return float(np.max(np.abs(self.coord - other.coord)))


def _trace_functional(alg: Algebra) -> np.ndarray:
    return (alg.identity().vec() * alg.coord_weights()).real


def adjoint(phi: Channel) -> Channel:
    return phi.adjoint()


def choi_matrix(phi: Channel) -> np.ndarray:
    return phi.choi()


def compose(phi2: Channel, phi1: Channel) -> Channel:
    """``phi2 o phi1``."""
    if phi1.output != phi2.input:
        raise ValueError(f"cannot compose {phi2!r} after {phi1!r}")
    return Channel(phi1.input, phi2.output, phi2.coord @ phi1.coord)


def channel_from_function(input: Algebra, output: Algebra,
                          f: Callable[[AlgElement], AlgElement]) -> Channel:
    """Tabulate a linear map on the matrix units of ``input``."""
    cols = []
    for k, i, j in input.matrix_units():
        y = as_element(f(input.matrix_unit(k, i, j)), output)
        cols.append(y.vec())
    return Channel(input, output, np.array(cols).T)


def identity_channel(alg: Algebra) -> Channel:
    return Channel(alg, alg, np.eye(alg.total_dim))


def channel_from_kraus(kraus: Sequence[np.ndarray], in_dim: int | None = None,
                       out_dim: int | None = None) -> Channel:
    """Map ``rho -> sum_m K_m rho K_m^*`` between full matrix algebras.

    Trace preservation is not required; it is reported by the ``tp`` flag.
    """
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    if not kraus:
        raise ValueError("need at least one Kraus operator")
    do, di = kraus[0].shape
    in_dim = di if in_dim is None else in_dim
    out_dim = do if out_dim is None else out_dim
    for K in kraus:
        if K.shape != (out_dim, in_dim):
            raise ValueError(f"Kraus operator shape {K.shape}, expected ({out_dim}, {in_dim})")
    coord = sum(np.kron(K, K.conj()) for K in kraus)
    return Channel(full_algebra(in_dim), full_algebra(out_dim), coord)


def trace_channel(alg: Algebra) -> Channel:
    """``x -> tau(x)`` into the scalars ``C`` with ``tau_C(1) = 1``."""
    row = alg.identity().vec() * alg.coord_weights()
    return Channel(alg, trivial_algebra(1.0), row[None, :])


def unitary_channel(U: np.ndarray) -> Channel:
    return channel_from_kraus([U])


def partial_trace_channel(dims: Sequence[int], keep: Sequence[int]) -> Channel:
    """Partial trace ``B(H_{d_0} (x) ...) -> B(H_keep)`` with matrix traces."""
    dims = [int(d) for d in dims]
    d_keep = int(np.prod([dims[k] for k in keep])) if len(keep) else 1
    return channel_from_function(
        full_algebra(int(np.prod(dims))), full_algebra(d_keep),
        lambda x: partial_trace(x.matrix, dims, keep))


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operator valued measure on ``C^hilbert_dim``."""

    hilbert_dim: int
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        effects = tuple(np.asarray(E, dtype=complex) for E in self.effects)
        object.__setattr__(self, "effects", effects)
        d = self.hilbert_dim
        if not effects:
            raise ValueError("a POVM needs at least one effect")
        for E in effects:
            if E.shape != (d, d):
                raise ValueError(f"effect shape {E.shape}, expected ({d}, {d})")
            if np.max(np.abs(E - E.conj().T)) > CHANNEL_TOL:
                raise ValueError("effects must be Hermitian")
            if np.linalg.eigvalsh(E).min() < -CHANNEL_TOL:
                raise ValueError("effects must be positive semidefinite")
        if np.max(np.abs(sum(effects) - np.eye(d))) > CHANNEL_TOL:
            raise ValueError("effects do not sum to the identity")

    @classmethod
    def from_basis(cls, U: np.ndarray) -> "Povm":
        """Projective measurement onto the columns of a unitary."""
        U = np.asarray(U, dtype=complex)
        return cls(U.shape[0], tuple(np.outer(U[:, x], U[:, x].conj()) for x in range(U.shape[1])))

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho)
        return np.array([np.trace(rho @ E).real for E in self.effects])


def povm_channel(P: Povm, *, as_matrix: bool = False) -> Channel:
    """Quantum-to-classical channel ``rho -> sum_x tr(rho E_x) |x><x|``.

    The output is the commutative algebra ``C^|X|``; with ``as_matrix`` it is
    the diagonal of ``M_|X|`` instead, which is what the Choi-norm path needs.
    """
    n, d = P.n_outcomes, P.hilbert_dim
    rows = np.array([E.T.ravel() for E in P.effects])
    if not as_matrix:
        return Channel(full_algebra(d), diagonal_algebra(n), rows)
    coord = np.zeros((n * n, d * d), dtype=complex)
    coord[np.arange(n) * (n + 1)] = rows
    return Channel(full_algebra(d), full_algebra(n), coord)


def classical_to_matrix(n: int, weight: float = 1.0) -> Channel:
    """Embedding of the commutative algebra ``C^n`` as diagonal matrices."""
    coord = np.zeros((n * n, n), dtype=complex)
    coord[np.arange(n) * (n + 1), np.arange(n)] = 1.0
    return Channel(diagonal_algebra(n, weight), full_algebra(n, weight), coord)


def as_full_output(phi: Channel) -> Channel:
    """Route a channel with commutative output through the diagonal embedding.

    Channels that already land in a full block are returned unchanged.
    """
    out = phi.output
    if out.is_full:
        return phi
    if out.is_commutative and len(set(out.weights)) == 1:
        return compose(classical_to_matrix(out.n_blocks, out.weights[0]), phi)
    raise ValueError("output algebra is neither a full block nor a uniform commutative algebra")


def tensor(phi1: Channel, phi2: Channel) -> Channel:
    """Tensor product of two maps between full matrix algebras."""
    for phi in (phi1, phi2):
        if not (phi.input.is_full and phi.output.is_full):
            raise ValueError("tensor products are supported between full blocks only")
    (di1,), (do1,) = phi1.input.dims, phi1.output.dims
    (di2,), (do2,) = phi2.input.dims, phi2.output.dims
    c1 = phi1.coord.reshape(do1, do1, di1, di1)
    c2 = phi2.coord.reshape(do2, do2, di2, di2)
    c = np.einsum("abcd,efgh->aebfcgdh", c1, c2).reshape((do1 * do2) ** 2, (di1 * di2) ** 2)
    inp = full_algebra(di1 * di2, phi1.input.weights[0] * phi2.input.weights[0])
    out = full_algebra(do1 * do2, phi1.output.weights[0] * phi2.output.weights[0])
    return Channel(inp, out, c)


def id_tensor(phi: Channel, c_dim: int) -> Channel:
    """``phi (x) id_C`` with the untouched reference system on the right."""
    return tensor(phi, identity_channel(full_algebra(c_dim)))


# --------------------------------------------------------------------------
# random generators


def random_unitary(d: int, seed=None) -> np.ndarray:
    return random_isometry(d, d, seed)


def random_isometry(m: int, n: int, seed=None) -> np.ndarray:
    """Haar-distributed isometry ``C^n -> C^m`` (``m >= n``)."""
    if m < n:
        raise ValueError("an isometry needs m >= n")
    rng = rng_from(seed)
    Z = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diagonal(R) / np.abs(np.diagonal(R))
    return Q * ph[None, :]


def random_state(algebra, rank=None, seed=None) -> AlgElement:
    """Ginibre-induced density ``G G^* / tau(G G^*)``.

    ``algebra`` may be an :class:`Algebra` or an integer dimension (matrix trace).
    ``rank`` is an integer applied to every block (capped at the block size)
    or a per-block sequence; ``None`` means full rank.
    """
    if not isinstance(algebra, Algebra):
        algebra = full_algebra(int(algebra))
    rng = rng_from(seed)
    if rank is None:
        ranks = list(algebra.dims)
    elif np.ndim(rank) == 0:
        if int(rank) < 1:
            raise ValueError("rank must be positive")
        ranks = [min(int(rank), d) for d in algebra.dims]
    else:
        ranks = [int(r) for r in rank]
        if len(ranks) != algebra.n_blocks or any(r < 0 or r > d for r, d in zip(ranks, algebra.dims)):
            raise ValueError("per-block ranks must lie in [0, dim]")
    blocks = []
    for d, r in zip(algebra.dims, ranks):
        G = (rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))) / np.sqrt(2)
        blocks.append(G @ G.conj().T)
    x = algebra.element(blocks)
    return x / x.trace().real


def random_channel(d_in: int, d_out: int, env_dim: int = 1, seed=None) -> Channel:
    """Stinespring channel ``rho -> tr_env(V rho V^*)`` with Haar isometry ``V``."""
    if min(d_in, d_out, env_dim) < 1:
        raise ValueError("dimensions must be positive")
    if d_out * env_dim < d_in:
        raise ValueError("need d_out * env_dim >= d_in for an isometric dilation")
    V = random_isometry(d_out * env_dim, d_in, seed).reshape(d_out, env_dim, d_in)
    return channel_from_kraus([V[:, e, :] for e in range(env_dim)])


def random_povm(d: int, n_outcomes: int, seed=None) -> Povm:
    V = random_isometry(n_outcomes * d, d, seed).reshape(n_outcomes, d, d)
    effects = []
    for Vx in V:
        E = Vx.conj().T @ Vx
        effects.append((E + E.conj().T) / 2)
    # absorb rounding so the completeness check holds to machine precision
    S = sum(effects)
    w, U = np.linalg.eigh(S)
    T = (U / np.sqrt(w)) @ U.conj().T
    return Povm(d, tuple(T @ E @ T for E in effects))
