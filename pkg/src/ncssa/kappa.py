"""The relative-entropy correction ``kappa = int alpha(t) log c(t) dt``.

``alpha(t) = pi / (2 (cosh(pi t) + 1))`` is a probability density on the real
line and

    c(t) = sup { tau_B(b W(t)) : b >= 0, E_R^dagger(b) = 1 },
    W(t) = Phi_B( Y(t) sigma Y(t)^* ),
    Y(t) = Phi_A^dagger( rho_A^((1+it)/2) sigma_A^((-1-it)/2) ),

with ``rho_A = Phi_A(rho)`` and ``sigma_A = Phi_A(sigma)``.  The integral is
evaluated by composite Gauss-Legendre quadrature on ``[-T, T]``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss

from .algebra import SUPPORT_TOL, AlgElement, Algebra, as_element, herm_eig, partial_trace
from .channels import Channel, channel_from_function, compose
from .inclusions import Inclusion, InclusionError, tensor_factor_inclusion, trivial_inclusion
from .sdp import expectation_constrained_max

__all__ = [
    "StateExpectation",
    "trivial_expectation",
    "factor_expectation",
    "alpha",
    "quadrature_rule",
    "KappaProblem",
    "KappaResult",
    "c_of_t",
    "kappa",
]


def alpha(t):
    """Density ``pi / (2 (cosh(pi t) + 1))``; its mass on ``[-T, T]`` is ``tanh(pi T / 2)``."""
    t = np.asarray(t, dtype=float)
    # 1 / (cosh x + 1) = 2 e^{-|x|} / (1 + e^{-|x|})^2, stable for large |x|
    e = np.exp(-np.pi * np.abs(t))
    return np.pi * e / (1.0 + e) ** 2


def quadrature_rule(T: float = 8.0, panel_width: float = 0.5, nodes: int = 16):
    """Nodes and ``alpha``-weighted weights of composite Gauss-Legendre on ``[-T, T]``."""
    n_panels = int(round(2 * T / panel_width))
    if n_panels < 1 or not np.isclose(n_panels * panel_width, 2 * T):
        raise ValueError("panel width must divide the interval [-T, T]")
    x, w = leggauss(nodes)
    edges = np.linspace(-T, T, n_panels + 1)
    mid = (edges[:-1] + edges[1:]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel() * alpha(t)
    return t, wt


class StateExpectation:
    """Conditional expectation ``E_R^dagger: B -> R`` preserving a state ``omega`` of ``B``.

    ``channel`` is the unital map ``B -> R`` and ``inclusion`` embeds ``R``
    into ``B``.  ``adjoint_map`` is ``E_R = (iota o E_R^dagger)^dagger``, a
    channel ``B -> B`` that fixes ``omega``.
    """

    def __init__(self, inclusion: Inclusion, channel: Channel, state: AlgElement, *,
                 validate: bool = True, tol: float = 1e-10):
        if channel.input != inclusion.ambient or channel.output != inclusion.sub:
            raise ValueError("expectation must map the ambient algebra onto the subalgebra")
        self.inclusion, self.channel, self.tol = inclusion, channel, tol
        self.state = as_element(state, inclusion.ambient)
        if validate:
            self.validate()

    @property
    def ambient(self) -> Algebra:
        return self.inclusion.ambient

    @cached_property
    def adjoint_map(self) -> Channel:
        return compose(self.inclusion.embed, self.channel).adjoint()

    @cached_property
    def weight(self) -> AlgElement:
        """``sigma_tr = E_R(1)``."""
        return self.adjoint_map(self.ambient.identity())

    def validate(self):
        E, iota, tol = self.channel, self.inclusion.embed, self.tol
        if not E.unital:
            raise InclusionError("expectation is not unital")
        if not E.cp:
            raise InclusionError("expectation is not completely positive")
        R = self.inclusion.sub
        for k, i, j in R.matrix_units():
            y = R.matrix_unit(k, i, j)
            if E(iota(y)).distance(y) > tol:
                raise InclusionError("expectation does not fix the subalgebra")
        B = self.ambient
        w = self.state
        for k, i, j in B.matrix_units():
            b = B.matrix_unit(k, i, j)
            lhs = (iota(E(b)) @ w).trace()
            rhs = (b @ w).trace()
            if abs(lhs - rhs) > tol:
                raise InclusionError("expectation does not preserve the state")


def trivial_expectation(state: AlgElement) -> StateExpectation:
    """``E^dagger(b) = tau_B(b omega) 1`` onto ``R = C 1``."""
    state = as_element(state)
    B = state.algebra
    inc = trivial_inclusion(B, 1.0)
    row = B.element([w * s.T for w, s in zip(B.weights, state.blocks)]).vec()
    return StateExpectation(inc, Channel(B, inc.sub, row[None, :]), state)


def factor_expectation(dims, keep: int, state) -> StateExpectation:
    """Expectation onto one tensor factor of ``B = B(H_0 (x) H_1)`` (matrix traces).

    ``E^dagger(b) = tr_other((omega_other) b)`` where ``omega_other`` is the
    marginal of ``state`` on the discarded factor; ``state`` must be a product
    across the split for the result to preserve it.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 2 or keep not in (0, 1):
        raise ValueError("factor expectations are implemented for bipartite splits")
    state = as_element(state)
    other = 1 - keep
    w_other = partial_trace(state.matrix, dims, (other,))
    inc = tensor_factor_inclusion(dims, (keep,))
    B = inc.ambient
    if keep == 0:
        weight = np.kron(np.eye(dims[0]), w_other)
    else:
        weight = np.kron(w_other, np.eye(dims[1]))
    chan = channel_from_function(B, inc.sub,
                                 lambda b: partial_trace(weight @ b.matrix, dims, (keep,)))
    return StateExpectation(inc, chan, state)


def _powers(ev: np.ndarray, U: np.ndarray, cut: float, z: complex) -> np.ndarray:
    mask = ev > cut
    return (U[:, mask] * np.exp(z * np.log(ev[mask]))) @ U[:, mask].conj().T


class KappaProblem:
    """Precomputed data for evaluating ``c(t)`` at many ``t``."""

    def __init__(self, rho, sigma, phi_a: Channel, phi_b: Channel, expectation: StateExpectation,
                 *, support_tol: float = SUPPORT_TOL, gap_tol: float = 1e-10):
        if phi_a.input != phi_b.input:
            raise ValueError("channels must share their input algebra")
        if expectation.ambient != phi_b.output:
            raise ValueError("expectation must act on the output algebra of Phi_B")
        self.rho = as_element(rho, phi_a.input)
        self.sigma = as_element(sigma, phi_a.input)
        self.phi_a, self.phi_b, self.expectation = phi_a, phi_b, expectation
        self.phi_a_adj = phi_a.adjoint()
        self.gap_tol = gap_tol
        omega = phi_b(self.sigma).herm()
        if expectation.state.distance(omega) > 1e-9:
            raise ValueError("expectation must preserve Phi_B(sigma)")
        rho_a, sig_a = phi_a(self.rho).herm(), phi_a(self.sigma).herm()
        self.eig_rho = herm_eig(rho_a)
        self.eig_sig = herm_eig(sig_a)
        self.cut_rho = support_tol * max(float(e.max()) for e, _ in self.eig_rho)
        self.cut_sig = support_tol * max(float(e.max()) for e, _ in self.eig_sig)
        self.support_ok = self._support_contained()
        self.trivial_r = expectation.inclusion.sub.total_dim == 1
        if self.trivial_r:
            blocks = []
            eig_w = herm_eig(omega)
            cut = support_tol * max(float(e.max()) for e, _ in eig_w)
            for ev, U in eig_w:
                blocks.append(_powers(ev, U, cut, -0.5))
            self.omega_isqrt = omega.algebra.element(blocks)

    def _support_contained(self) -> bool:
        for (er, Ur), (es, Us) in zip(self.eig_rho, self.eig_sig):
            Pr = Ur[:, er > self.cut_rho]
            Qs = Us[:, es <= self.cut_sig]
            if Pr.size and Qs.size and np.abs(Qs.conj().T @ Pr).max() > 1e-8:
                return False
        return True

    def W(self, t: float) -> AlgElement:
        A = self.phi_a.output
        z1, z2 = (1 + 1j * t) / 2, (-1 - 1j * t) / 2
        blocks = [_powers(er, Ur, self.cut_rho, z1) @ _powers(es, Us, self.cut_sig, z2)
                  for (er, Ur), (es, Us) in zip(self.eig_rho, self.eig_sig)]
        Y = self.phi_a_adj(A.element(blocks))
        return self.phi_b(Y @ self.sigma @ Y.adjoint()).herm()

    def c(self, t: float) -> float:
        W = self.W(t)
        if self.trivial_r:
            s = self.omega_isqrt
            return float(max(np.linalg.eigvalsh(b).max() for b in (s @ W @ s).herm().blocks))
        res = expectation_constrained_max(W, self.expectation.channel, gap_tol=self.gap_tol)
        return float(res.value)


def c_of_t(t: float, rho, sigma, phi_a: Channel, phi_b: Channel,
           expectation: StateExpectation, **kw) -> float:
    """``c(t)`` for a single ``t``; see :class:`KappaProblem` for repeated use."""
    return KappaProblem(rho, sigma, phi_a, phi_b, expectation, **kw).c(t)


@dataclass
class KappaResult:
    kappa: float
    samples: list
    T: float
    quadrature_error_estimate: float
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


def _eval_nodes(problem: KappaProblem, t: np.ndarray, jobs: int) -> np.ndarray:
    if jobs <= 1 or t.size < 2 * jobs:
        return np.array([problem.c(ti) for ti in t])
    chunks = np.array_split(t, jobs)
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        parts = list(ex.map(_eval_chunk, [problem] * len(chunks), chunks))
    return np.concatenate(parts)


def _eval_chunk(problem: KappaProblem, t: np.ndarray) -> np.ndarray:
    return np.array([problem.c(ti) for ti in t])


def kappa(rho, sigma, phi_a: Channel, phi_b: Channel, expectation: StateExpectation, *,
          T: float = 8.0, panel_width: float = 0.5, nodes: int = 16, tol: float = 1e-8,
          max_refinements: int = 3, jobs: int = 1, **kw) -> KappaResult:
    """``kappa = int alpha(t) log c(t) dt`` with an error estimate.

    The panel width is halved until two successive estimates differ by less
    than ``tol`` (at most ``max_refinements`` times).  The error estimate is
    that last difference plus the tail bound ``2 exp(-pi T) max |log c|``.
    """
    problem = KappaProblem(rho, sigma, phi_a, phi_b, expectation, **kw)
    if not problem.support_ok:
        raise ValueError("supp Phi_A(rho) is not contained in supp Phi_A(sigma)")
    h = panel_width
    prev, history = None, []
    for level in range(max_refinements + 1):
        t, w = quadrature_rule(T, h, nodes)
        c = _eval_nodes(problem, t, jobs)
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise RuntimeError("c(t) must be positive and finite; the inner solver failed")
        k = float(np.sum(w * np.log(c)))
        history.append(k)
        change = abs(k - prev) if prev is not None else np.inf
        if prev is not None and change < tol:
            break
        prev = k
        h /= 2
    tail = 2.0 * np.exp(-np.pi * T) * float(np.max(np.abs(np.log(c))))
    err = (0.0 if len(history) < 2 else abs(history[-1] - history[-2])) + tail
    samples = list(zip(t.tolist(), c.tolist(), w.tolist()))
    return KappaResult(history[-1], samples, T, err, bool(len(history) > 1 and change < tol),
                       {"levels": history, "panel_width": h, "weight_sum": float(w.sum())})
