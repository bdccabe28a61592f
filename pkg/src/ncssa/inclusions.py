"""Subalgebra inclusions and their trace-adjoint conditional expectations."""

from __future__ import annotations

from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .algebra import AlgElement, Algebra, as_element, diagonal_algebra, full_algebra, trivial_algebra
from .channels import Channel, channel_from_function, compose

__all__ = [
    "Inclusion",
    "InclusionError",
    "inclusion_from_images",
    "identity_inclusion",
    "trivial_inclusion",
    "diagonal_inclusion",
    "tensor_factor_inclusion",
    "conjugate_inclusion",
    "nested_inclusion",
    "cond_expectation",
    "INCLUSION_TOL",
]

INCLUSION_TOL = 1e-10


class InclusionError(ValueError):
    """The supplied embedding is not a unital *-homomorphism."""


class Inclusion:
    """Unital *-homomorphism ``iota: N -> M`` with ``E_N = iota^dagger``.

    ``cond_exp`` is the adjoint of ``embed`` for the two weighted traces and
    ``weight`` is ``sigma_tr = E_N(1)``.  When the trace on ``N`` is the one
    induced from ``M``, ``sigma_tr = 1`` and ``E_N o iota = id``; in general
    ``E_N(iota(y)) = sigma_tr y`` with central ``sigma_tr``.
    """

    def __init__(self, sub: Algebra, ambient: Algebra, embed: Channel, *, validate: bool = True,
                 tol: float = INCLUSION_TOL):
        if embed.input != sub or embed.output != ambient:
            raise ValueError("embedding does not act between the given algebras")
        self.sub = sub
        self.ambient = ambient
        self.embed = embed
        self.tol = tol
        if validate:
            self.validate()

    def __repr__(self):
        return f"Inclusion({self.sub.dims} -> {self.ambient.dims})"

    @cached_property
    def cond_exp(self) -> Channel:
        return self.embed.adjoint()

    @cached_property
    def weight(self) -> AlgElement:
        return self.cond_exp(self.ambient.identity())

    @cached_property
    def induced_weights(self) -> tuple[float, ...]:
        """Block weights of the trace ``tau_M o iota`` on ``N``."""
        out = []
        for k in range(self.sub.n_blocks):
            out.append(self.embed(self.sub.matrix_unit(k, 0, 0)).trace().real)
        return tuple(out)

    @property
    def is_induced(self) -> bool:
        return np.allclose(self.induced_weights, self.sub.weights, rtol=1e-12, atol=0.0)

    def with_induced_trace(self) -> "Inclusion":
        """Same embedding, with ``N`` carrying the restriction of ``tau_M``."""
        sub = Algebra(self.sub.dims, self.induced_weights)
        return Inclusion(sub, self.ambient, Channel(sub, self.ambient, self.embed.coord), validate=False)

    @cached_property
    def projection(self) -> Channel:
        """``iota o E_N`` as a map ``M -> M``."""
        return compose(self.embed, self.cond_exp)

    def validate(self):
        """Check unitality, multiplicativity, adjoints and the expectation identity."""
        sub, tol = self.sub, self.tol
        one = self.embed(sub.identity())
        if one.distance(self.ambient.identity()) > tol:
            raise InclusionError("embedding is not unital")
        units = sub.matrix_units()
        images = [self.embed(sub.matrix_unit(*u)) for u in units]
        index = {u: n for n, u in enumerate(units)}
        for a, (k, i, j) in enumerate(units):
            if images[a].adjoint().distance(images[index[(k, j, i)]]) > tol:
                raise InclusionError("embedding does not preserve adjoints")
            for b, (k2, i2, j2) in enumerate(units):
                prod = images[a] @ images[b]
                if k == k2 and j == i2:
                    err = prod.distance(images[index[(k, i, j2)]])
                else:
                    err = max(float(np.abs(blk).max(initial=0.0)) for blk in prod.blocks)
                if err > tol:
                    raise InclusionError("embedding is not multiplicative")
        # conditional expectation: E_N(iota(y)) = sigma_tr y
        E, w = self.cond_exp, self.weight
        for n, u in enumerate(units):
            y = sub.matrix_unit(*u)
            if E(images[n]).distance(w @ y) > tol:
                raise InclusionError("conditional expectation is inconsistent with the embedding")


def cond_expectation(inc: Inclusion, x) -> AlgElement:
    """``E_N(x)`` for ``x`` in the ambient algebra."""
    return inc.cond_exp(as_element(x, inc.ambient))


def inclusion_from_images(sub: Algebra, ambient: Algebra, images: Sequence, **kw) -> Inclusion:
    """Inclusion determined by the images of the matrix units of ``sub``.

    ``images`` follows the order of ``sub.matrix_units()``.
    """
    images = [as_element(y, ambient) for y in images]
    if len(images) != sub.total_dim:
        raise ValueError(f"need {sub.total_dim} images, got {len(images)}")
    coord = np.array([y.vec() for y in images]).T
    return Inclusion(sub, ambient, Channel(sub, ambient, coord), **kw)


def identity_inclusion(alg: Algebra) -> Inclusion:
    return Inclusion(alg, alg, Channel(alg, alg, np.eye(alg.total_dim)), validate=False)


@lru_cache(maxsize=256)
def trivial_inclusion(ambient: Algebra, weight: float = 1.0) -> Inclusion:
    """``C 1 -> M`` where ``C`` carries ``tau(1) = weight``."""
    sub = trivial_algebra(weight)
    return Inclusion(sub, ambient, Channel(sub, ambient, ambient.identity().vec()[:, None]),
                     validate=False)


@lru_cache(maxsize=256)
def diagonal_inclusion(d: int, weight: float = 1.0, ambient_weight: float = 1.0) -> Inclusion:
    """Diagonal matrices ``C^d`` inside ``M_d``."""
    sub, amb = diagonal_algebra(d, weight), full_algebra(d, ambient_weight)
    coord = np.zeros((d * d, d), dtype=complex)
    coord[np.arange(d) * (d + 1), np.arange(d)] = 1.0
    return Inclusion(sub, amb, Channel(sub, amb, coord), validate=False)


@lru_cache(maxsize=256)
def tensor_factor_inclusion(dims: tuple[int, ...], keep: tuple[int, ...], weight: float = 1.0,
                            sub_weight: float = 1.0) -> Inclusion:
    """``B(H_keep) -> B(H_0 (x) H_1 (x) ...)`` by tensoring with identities.

    With the default weights both algebras carry matrix traces, so the
    conditional expectation is the partial trace.
    """
    dims, keep = tuple(int(d) for d in dims), tuple(sorted(int(k) for k in keep))
    n = len(dims)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    sub, amb = full_algebra(d_keep, sub_weight), full_algebra(int(np.prod(dims)), weight)
    rest = [k for k in range(n) if k not in keep]
    perm_dims = [dims[k] for k in keep] + [dims[k] for k in rest]
    order = list(keep) + rest
    inv = np.argsort(order)
    d_rest = int(np.prod([dims[k] for k in rest])) if rest else 1

    def embed(y: AlgElement) -> AlgElement:
        big = np.kron(y.matrix, np.eye(d_rest)).reshape(perm_dims + perm_dims)
        big = big.transpose(list(inv) + [n + i for i in inv])
        return amb.element([big.reshape(amb.dims[0], amb.dims[0])])

    return Inclusion(sub, amb, channel_from_function(sub, amb, embed), validate=False)


def conjugate_inclusion(inc: Inclusion, U: np.ndarray) -> Inclusion:
    """``y -> U iota(y) U^*`` for a unitary on a full-block ambient algebra."""
    if not inc.ambient.is_full:
        raise ValueError("conjugation requires a full-block ambient algebra")
    U = np.asarray(U, dtype=complex)
    d = inc.ambient.dims[0]
    conj = np.kron(U, U.conj())  # row-major vec of U X U^*
    if conj.shape != (d * d, d * d):
        raise ValueError("unitary has the wrong size")
    return Inclusion(inc.sub, inc.ambient, Channel(inc.sub, inc.ambient, conj @ inc.embed.coord),
                     validate=False)


def nested_inclusion(inner: Inclusion, outer: Inclusion, **kw) -> Inclusion:
    """``R in A`` from ``R in M`` and ``A in M``, via ``E_A o iota_R``.

    Raises :class:`InclusionError` when ``iota_R(R)`` is not contained in ``A``.
    """
    if inner.ambient != outer.ambient:
        raise ValueError("both inclusions must share the ambient algebra")
    embed = compose(outer.cond_exp, inner.embed)
    if np.abs(outer.projection.coord @ inner.embed.coord - inner.embed.coord).max() > INCLUSION_TOL:
        raise InclusionError("the inner subalgebra is not contained in the outer one")
    return Inclusion(inner.sub, outer.sub, embed, **kw)

