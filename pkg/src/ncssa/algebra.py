"""Finite-dimensional von Neumann algebras with explicit trace weights.

An :class:`Algebra` is a direct sum of full matrix blocks ``M_{d_1} + ... + M_{d_m}``
whose trace is ``tau(x) = sum_k w_k tr(x_k)``.  Elements are stored block by
block in :class:`AlgElement`.  Matrix functions of positive elements all go
through a Hermitian eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Algebra",
    "AlgElement",
    "PositivityError",
    "make_algebra",
    "full_algebra",
    "diagonal_algebra",
    "trivial_algebra",
    "as_element",
    "trace",
    "herm_eig",
    "herm_apply",
    "herm_power",
    "herm_log",
    "support_projection",
    "partial_trace",
    "POSITIVITY_TOL",
    "SUPPORT_TOL",
]

POSITIVITY_TOL = 1e-10
SUPPORT_TOL = 1e-10


class PositivityError(ValueError):
    """Raised when an operator expected to be positive semidefinite is not."""


@dataclass(frozen=True)
class Algebra:
    """Direct sum of full matrix blocks with per-block trace weights.

    Parameters
    ----------
    dims : tuple of int
        Block sizes ``d_k``.
    weights : tuple of float
        Trace weights ``w_k > 0``; the trace of the identity is ``sum w_k d_k``.
    """

    dims: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.dims) == 0:
            raise ValueError("an algebra needs at least one block")
        if len(self.dims) != len(self.weights):
            raise ValueError("dims and weights must have equal length")
        for d, w in zip(self.dims, self.weights):
            if int(d) != d or d < 1:
                raise ValueError(f"block dimension must be a positive integer, got {d!r}")
            if not np.isfinite(w) or w <= 0:
                raise ValueError(f"block weight must be positive, got {w!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def n_blocks(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        """Real-linear dimension over C, i.e. ``sum d_k**2``."""
        return sum(d * d for d in self.dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, pos = [], 0
        for d in self.dims:
            out.append(pos)
            pos += d * d
        return tuple(out)

    @property
    def is_full(self) -> bool:
        """True for a single full matrix block."""
        return self.n_blocks == 1

    @property
    def is_commutative(self) -> bool:
        return all(d == 1 for d in self.dims)

    @property
    def unit_trace(self) -> float:
        return float(sum(w * d for d, w in zip(self.dims, self.weights)))

    def coord_weights(self) -> np.ndarray:
        """Trace weight attached to each vectorized coordinate."""
        return np.concatenate([np.full(d * d, w) for d, w in zip(self.dims, self.weights)])

    def transpose_perm(self) -> np.ndarray:
        """Permutation of coordinates realizing the blockwise transpose."""
        idx = []
        for off, d in zip(self.offsets, self.dims):
            idx.append(off + np.arange(d * d).reshape(d, d).T.ravel())
        return np.concatenate(idx)

    def element(self, blocks: Sequence[np.ndarray]) -> "AlgElement":
        return AlgElement(self, tuple(np.asarray(b, dtype=complex) for b in blocks))

    def identity(self) -> "AlgElement":
        return self.element([np.eye(d) for d in self.dims])

    def zeros(self) -> "AlgElement":
        return self.element([np.zeros((d, d)) for d in self.dims])

    def from_vec(self, v: np.ndarray) -> "AlgElement":
        v = np.asarray(v)
        if v.shape != (self.total_dim,):
            raise ValueError(f"coordinate vector has shape {v.shape}, expected ({self.total_dim},)")
        return self.element([v[o:o + d * d].reshape(d, d) for o, d in zip(self.offsets, self.dims)])

    def matrix_unit(self, k: int, i: int, j: int) -> "AlgElement":
        blocks = [np.zeros((d, d), dtype=complex) for d in self.dims]
        blocks[k][i, j] = 1.0
        return self.element(blocks)

    def matrix_units(self) -> list[tuple[int, int, int]]:
        """Index triples ``(block, i, j)`` in coordinate order."""
        return [(k, i, j) for k, d in enumerate(self.dims) for i in range(d) for j in range(d)]

    def maximally_mixed(self) -> "AlgElement":
        return self.identity() * (1.0 / self.unit_trace)

    def to_dict(self) -> dict:
        return {"blocks": [{"dim": d, "weight": w} for d, w in zip(self.dims, self.weights)]}


def make_algebra(blocks: Iterable[tuple[int, float]]) -> Algebra:
    """Build an algebra from ``[(dim, weight), ...]``.

    Examples
    --------
    >>> make_algebra([(2, 0.5), (3, 1.0)]).unit_trace
    4.0
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("an algebra needs at least one block")
    dims, weights = zip(*blocks)
    return Algebra(tuple(dims), tuple(weights))


def full_algebra(d: int, weight: float = 1.0) -> Algebra:
    return Algebra((d,), (weight,))


def diagonal_algebra(d: int, weight: float = 1.0) -> Algebra:
    """The commutative algebra C^d with weight ``weight`` on every atom."""
    return Algebra((1,) * d, (weight,) * d)


def trivial_algebra(weight: float = 1.0) -> Algebra:
    return Algebra((1,), (weight,))


@dataclass(frozen=True, eq=False)
class AlgElement:
    """Block-diagonal operator in an :class:`Algebra`."""

    algebra: Algebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != self.algebra.n_blocks:
            raise ValueError(
                f"element has {len(self.blocks)} blocks, algebra has {self.algebra.n_blocks}")
        for b, d in zip(self.blocks, self.algebra.dims):
            if b.shape != (d, d):
                raise ValueError(f"block shape {b.shape} does not match dimension {d}")

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "AlgElement"):
        if not isinstance(other, AlgElement):
            raise TypeError("expected an AlgElement")
        if other.algebra != self.algebra:
            raise ValueError("elements live in different algebras")

    def __add__(self, other):
        self._check(other)
        return AlgElement(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        self._check(other)
        return AlgElement(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return AlgElement(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, scalar):
        if isinstance(scalar, AlgElement):
            raise TypeError("use @ for the algebra product")
        return AlgElement(self.algebra, tuple(scalar * a for a in self.blocks))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        self._check(other)
        return AlgElement(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    # structure -------------------------------------------------------------
    def adjoint(self) -> "AlgElement":
        return AlgElement(self.algebra, tuple(a.conj().T for a in self.blocks))

    @property
    def H(self) -> "AlgElement":
        return self.adjoint()

    def herm(self) -> "AlgElement":
        """Hermitian part ``(x + x*)/2``."""
        return AlgElement(self.algebra, tuple((a + a.conj().T) / 2 for a in self.blocks))

    def vec(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks])

    @property
    def matrix(self) -> np.ndarray:
        """The single block of an element of a full algebra."""
        if self.algebra.n_blocks != 1:
            raise ValueError("matrix view needs a single-block algebra")
        return self.blocks[0]

    def dense(self) -> np.ndarray:
        """Block-diagonal dense matrix (trace weights are not applied)."""
        n = sum(self.algebra.dims)
        out = np.zeros((n, n), dtype=complex)
        pos = 0
        for b in self.blocks:
            d = b.shape[0]
            out[pos:pos + d, pos:pos + d] = b
            pos += d
        return out

    def trace(self) -> complex:
        return trace(self)

    def norm_op(self) -> float:
        return max(np.linalg.norm(b, 2) for b in self.blocks)

    def distance(self, other: "AlgElement") -> float:
        """Largest entrywise deviation, used by tests and validators."""
        self._check(other)
        return max(float(np.max(np.abs(a - b), initial=0.0)) for a, b in zip(self.blocks, other.blocks))

    def eigvalsh(self) -> list[np.ndarray]:
        return [np.linalg.eigvalsh((b + b.conj().T) / 2) for b in self.blocks]

    def is_hermitian(self, tol: float = POSITIVITY_TOL) -> bool:
        scale = max(1.0, self.norm_op())
        return all(np.max(np.abs(b - b.conj().T), initial=0.0) <= tol * scale for b in self.blocks)

    def is_positive(self, tol: float = POSITIVITY_TOL) -> bool:
        if not self.is_hermitian(tol):
            return False
        scale = max(1.0, self.norm_op())
        return all(ev.min() >= -tol * scale for ev in self.eigvalsh())

    def is_state(self, tol: float = 1e-9) -> bool:
        return self.is_positive(tol) and abs(trace(self) - 1.0) <= tol

    def to_dict(self) -> dict:
        return {"blocks": [[[[float(z.real), float(z.imag)] for z in row] for row in b]
                           for b in self.blocks]}


def as_element(x, algebra: Algebra | None = None) -> AlgElement:
    """Coerce a square array (full block, matrix trace) or an element."""
    if isinstance(x, AlgElement):
        if algebra is not None and x.algebra != algebra:
            raise ValueError("element lives in a different algebra")
        return x
    x = np.asarray(x, dtype=complex)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    if algebra is None:
        algebra = full_algebra(x.shape[0])
    if algebra.n_blocks != 1:
        raise ValueError("plain arrays can only be coerced into single-block algebras")
    return algebra.element([x])


def trace(x) -> complex:
    """Weighted trace ``sum_k w_k tr(x_k)``."""
    x = as_element(x)
    return complex(sum(w * np.trace(b) for w, b in zip(x.algebra.weights, x.blocks)))


# --------------------------------------------------------------------------
# Hermitian functional calculus


def _check_hermitian_block(b: np.ndarray, tol: float):
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    if np.max(np.abs(b - b.conj().T), initial=0.0) > tol * scale:
        raise PositivityError("operator is not Hermitian")


def herm_eig(x, *, positive: bool = True, tol: float = POSITIVITY_TOL):
    """Per-block eigendecomposition ``[(evals, evecs), ...]`` of a Hermitian element.

    With ``positive=True`` eigenvalues below ``-tol * max(1, |x|)`` raise
    :class:`PositivityError` and the remaining small negatives are clipped to 0.
    """
    x = as_element(x)
    out = []
    for b in x.blocks:
        _check_hermitian_block(b, tol)
        ev, U = np.linalg.eigh((b + b.conj().T) / 2)
        if positive:
            scale = max(1.0, float(np.max(np.abs(ev), initial=0.0)))
            if ev.size and ev.min() < -tol * scale:
                raise PositivityError(f"negative eigenvalue {ev.min():.3e}")
            ev = np.clip(ev, 0.0, None)
        out.append((ev, U))
    return out


def _support_threshold(eigs, support_tol: float) -> float:
    lam_max = max((float(ev.max()) for ev, _ in eigs if ev.size), default=0.0)
    return support_tol * lam_max


def herm_apply(x, f: Callable[[np.ndarray], np.ndarray], *, support_only: bool = False,
               support_tol: float = SUPPORT_TOL, positive: bool = True) -> AlgElement:
    """Apply a scalar function through the eigendecomposition.

    If ``support_only`` the function is applied on the support of ``x`` only
    (eigenvalues at most ``support_tol * lambda_max`` map to zero).
    """
    x = as_element(x)
    eigs = herm_eig(x, positive=positive)
    cut = _support_threshold(eigs, support_tol) if support_only else -np.inf
    blocks = []
    for ev, U in eigs:
        mask = ev > cut
        vals = np.zeros(ev.shape, dtype=complex)
        if mask.any():
            vals[mask] = f(ev[mask])
        blocks.append((U * vals) @ U.conj().T)
    return x.algebra.element(blocks)


def herm_power(x, z: complex, support_tol: float = SUPPORT_TOL) -> AlgElement:
    """Complex power ``x**z`` of a positive element, taken on its support.

    Eigenvalues at most ``support_tol * lambda_max`` (global over blocks) are
    treated as kernel, so ``x**0`` is the support projection and negative
    powers are pseudo-inverse powers.

    Examples
    --------
    >>> herm_power(np.diag([4.0, 1.0]), 0.5).matrix.real
    array([[2., 0.],
           [0., 1.]])
    """
    z = complex(z)
    return herm_apply(x, lambda ev: np.exp(z * np.log(ev)), support_only=True, support_tol=support_tol)


def herm_log(x, support_tol: float = SUPPORT_TOL) -> AlgElement:
    """Logarithm on the support (zero on the kernel)."""
    return herm_apply(x, np.log, support_only=True, support_tol=support_tol)


def support_projection(x, support_tol: float = SUPPORT_TOL) -> AlgElement:
    return herm_apply(x, np.ones_like, support_only=True, support_tol=support_tol)


def partial_trace(x: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a dense matrix on ``H_{d_0} (x) H_{d_1} (x) ...``.

    ``keep`` lists the retained factors in increasing order.
    """
    dims = [int(d) for d in dims]
    n = len(dims)
    x = np.asarray(x)
    if x.shape != (int(np.prod(dims)),) * 2:
        raise ValueError(f"matrix shape {x.shape} inconsistent with dims {dims}")
    keep = sorted(int(k) for k in keep)
    if any(k < 0 or k >= n for k in keep):
        raise ValueError("keep index out of range")
    t = x.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for k in range(n):
        if k not in keep:
            cols[k] = rows[k]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return res.reshape(dk, dk)
