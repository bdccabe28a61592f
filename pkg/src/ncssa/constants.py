"""Uncertainty constants for pairs of channels.

* :func:`cb_constant`: operator norm of the Choi matrix of ``Phi_B o Phi_A^dagger``.
* :func:`frank_lieb_overlap`: ``max_{x,z} tr(E_x F_z)`` for two POVMs.
* :func:`overlap_constant`: ``sup tau_M(Phi_A^dagger(a) Phi_B^dagger(b))`` over
  ``a >= 0, E_R(a) = 1`` and states ``b``, by alternating maximization.
* :func:`state_dependent_constant`: ``|| Phi_A Phi_B^dagger Phi_B(rho) ||_{L_1^inf(R in A)}``.
* :func:`bsw_constant`: log-Euclidean lower bound with the matching upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .algebra import AlgElement, Algebra, as_element, herm_eig
from .channels import Channel, Povm, as_full_output, compose, rng_from
from .inclusions import Inclusion, trivial_inclusion
from .norms import l1_inf_norm

__all__ = [
    "cb_constant",
    "frank_lieb_overlap",
    "OverlapResult",
    "overlap_constant",
    "state_dependent_constant",
    "BswResult",
    "bsw_constant",
    "log_euclidean_trace",
    "MonotonicityError",
]


class MonotonicityError(RuntimeError):
    """An alternating-maximization step decreased the objective."""


def cb_constant(phi_a: Channel, phi_b: Channel) -> float:
    """``|| Choi(Phi_B o Phi_A^dagger) ||_inf``.

    Channels with a commutative output are first routed through the diagonal
    embedding, which leaves the constant unchanged.
    """
    phi_a, phi_b = as_full_output(phi_a), as_full_output(phi_b)
    if phi_a.input != phi_b.input:
        raise ValueError("channels must share their input algebra")
    if not phi_a.input.is_full:
        raise ValueError("the Choi-norm constant needs a full-block input algebra")
    C = compose(phi_b, phi_a.adjoint()).choi()
    return float(np.linalg.norm((C + C.conj().T) / 2, 2))


def frank_lieb_overlap(P: Povm, Q: Povm, tol: float = 1e-12):
    """Maximal overlap ``max_{x,z} tr(E_x F_z)`` and all maximizing pairs.

    Examples
    --------
    >>> Z = Povm.from_basis(np.eye(2))
    >>> X = Povm.from_basis(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    >>> value, pairs = frank_lieb_overlap(Z, X)
    >>> round(value, 12), len(pairs)
    (0.5, 4)
    """
    if P.hilbert_dim != Q.hilbert_dim:
        raise ValueError("POVMs act on different Hilbert spaces")
    O = np.array([[np.trace(E @ F).real for F in Q.effects] for E in P.effects])
    value = float(O.max())
    pairs = [tuple(int(i) for i in ix) for ix in np.argwhere(O >= value - tol)]
    return value, pairs


@dataclass
class OverlapResult:
    """Best value of the bilinear overlap and its witnesses.

    ``value`` is attained by the returned ``(a, b)`` and therefore a certified
    lower bound on the supremum.
    """

    value: float
    a: AlgElement
    b: AlgElement
    restarts_agree: bool
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def _top_state(y: AlgElement):
    """State ``b`` maximizing ``tau(b y)``: a weighted rank-one projection."""
    best = (-np.inf, 0, None)
    for k, (ev, U) in enumerate(herm_eig(y, positive=False)):
        if ev[-1] > best[0]:
            best = (float(ev[-1]), k, U[:, -1])
    lam, k, v = best
    alg = y.algebra
    blocks = [np.zeros((d, d), dtype=complex) for d in alg.dims]
    blocks[k] = np.outer(v, v.conj()) / alg.weights[k]
    return alg.element(blocks), lam


def _random_pure_state(alg: Algebra, rng) -> AlgElement:
    k = int(rng.integers(alg.n_blocks))
    d = alg.dims[k]
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    blocks = [np.zeros((dd, dd), dtype=complex) for dd in alg.dims]
    blocks[k] = np.outer(v, v.conj()) / alg.weights[k]
    return alg.element(blocks)


def overlap_constant(phi_a: Channel, phi_b: Channel, r_inc: Inclusion | None = None, *,
                     restarts: int = 16, seed=0, max_iter: int = 500, tol: float = 1e-12,
                     init_b: Sequence[AlgElement] = (), gap_tol: float = 1e-10) -> OverlapResult:
    """Alternating maximization of ``tau_M(Phi_A^dagger(a) Phi_B^dagger(b))``.

    The ``a``-step solves ``sup {tau_A(a X) : a >= 0, E_R(a) = 1}`` for
    ``X = Phi_A Phi_B^dagger(b)`` (the dual of the ``L_1^inf`` SDP); the
    ``b``-step takes the top eigenvector of ``Phi_B Phi_A^dagger(a)``.  Every
    step is accepted only if it does not decrease the objective, so the
    recorded sequence is nondecreasing.  A decrease larger than numerical noise
    raises :class:`MonotonicityError`.

    ``r_inc`` defaults to ``C 1`` inside ``A`` with ``tau_R(1) = 1``.
    """
    if phi_a.input != phi_b.input:
        raise ValueError("channels must share their input algebra")
    A, B = phi_a.output, phi_b.output
    if r_inc is None:
        r_inc = trivial_inclusion(A, 1.0)
    if r_inc.ambient != A:
        raise ValueError("R must be a subalgebra of the output of Phi_A")
    K = compose(phi_a, phi_b.adjoint())       # B -> A
    Kd = compose(phi_b, phi_a.adjoint())      # A -> B
    rng = rng_from(seed)
    noise = 1e-8

    def a_step(b):
        X = K(b).herm()
        res = l1_inf_norm(X, r_inc, gap_tol=gap_tol)
        a = res.witness
        return a, float((a @ X).trace().real)

    def run(b0):
        b = b0
        a, f = a_step(b)
        history = [f]
        converged = False
        for _ in range(max_iter):
            b_new, fb = _top_state(Kd(a).herm())
            if fb < f - noise * max(1.0, abs(f)):
                raise MonotonicityError(f"b-step decreased objective from {f} to {fb}")
            if fb > f:
                b = b_new
            f_mid = max(f, fb)
            a_new, fa = a_step(b)
            if fa < f_mid - noise * max(1.0, abs(f_mid)):
                raise MonotonicityError(f"a-step decreased objective from {f_mid} to {fa}")
            if fa > f_mid:
                a = a_new
            f_new = max(f_mid, fa)
            history.append(f_mid)
            history.append(f_new)
            if f_new - f <= tol * max(1.0, abs(f_new)):
                converged = True
                f = f_new
                break
            f = f_new
        return f, a, b, history, converged

    starts = list(init_b) + [B.maximally_mixed()]
    n_random = max(restarts - len(starts), 0)
    n_perturbed = n_random // 4
    starts += [_random_pure_state(B, rng) for _ in range(n_random - n_perturbed)]
    results = [run(b0) for b0 in starts]
    for _ in range(n_perturbed):
        best = max(results, key=lambda r: r[0])
        mix = 0.3 * _random_pure_state(B, rng) + 0.7 * best[2]
        results.append(run(mix))
    best = max(results, key=lambda r: r[0])
    values = np.array([r[0] for r in results])
    return OverlapResult(
        value=float(best[0]), a=best[1], b=best[2],
        restarts_agree=bool(np.sum(values >= best[0] - 1e-7) >= 2 or len(values) == 1),
        converged=bool(best[4]),
        diagnostics={"restart_values": values.tolist(), "history": best[3],
                     "n_restarts": len(results)})


def state_dependent_constant(rho, phi_a: Channel, phi_b: Channel, r_inc: Inclusion | None = None,
                             *, gap_tol: float = 1e-10) -> float:
    """``c(rho) = || Phi_A Phi_B^dagger Phi_B(rho) ||_{L_1^inf(R in A)}``."""
    rho = as_element(rho, phi_a.input)
    if r_inc is None:
        r_inc = trivial_inclusion(phi_a.output, 1.0)
    x = phi_a(phi_b.adjoint()(phi_b(rho))).herm()
    return l1_inf_norm(x, r_inc, gap_tol=gap_tol).value


# --------------------------------------------------------------------------
# log-Euclidean (Brascamp-Lieb type) constant


def _support_basis(ev, U, tol):
    mask = ev > tol * max(float(ev.max()), 1e-300)
    return U[:, mask], ev[mask]


def log_euclidean_trace(X: AlgElement, Y: AlgElement, support_tol: float = 1e-12) -> float:
    """``tau(exp(ln X + ln Y))`` for positive ``X, Y``, singular ones included.

    For singular arguments this is the limit of the regularized expression,
    which lives on the intersection ``P`` of the two supports and equals
    ``tau(P exp(P ln X P + P ln Y P) P)``.
    """
    total = 0.0
    for w, (ex, Ux), (ey, Uy) in zip(X.algebra.weights, herm_eig(X), herm_eig(Y)):
        Vx, lx = _support_basis(ex, Ux, support_tol)
        Vy, ly = _support_basis(ey, Uy, support_tol)
        n = Ux.shape[0]
        Qx = np.eye(n) - Vx @ Vx.conj().T
        Qy = np.eye(n) - Vy @ Vy.conj().T
        ev, V = np.linalg.eigh(Qx + Qy)
        P = V[:, ev < 1e-9]
        if P.shape[1] == 0:
            continue
        LX = (Vx * np.log(lx)) @ Vx.conj().T
        LY = (Vy * np.log(ly)) @ Vy.conj().T
        S = P.conj().T @ (LX + LY) @ P
        total += w * float(np.sum(np.exp(np.linalg.eigvalsh((S + S.conj().T) / 2))))
    return total


@dataclass
class BswResult:
    lower: float
    upper: float
    a: AlgElement
    b: AlgElement
    cb: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _exp_state(alg: Algebra, v: np.ndarray, basis_mat: np.ndarray) -> AlgElement:
    h = alg.from_vec(v @ basis_mat).herm()
    blocks = []
    shift = max(float(np.linalg.eigvalsh(b).max()) for b in h.blocks)
    for b in h.blocks:
        ev, U = np.linalg.eigh(b)
        blocks.append((U * np.exp(ev - shift)) @ U.conj().T)
    e = alg.element(blocks)
    return e / e.trace().real


def bsw_constant(phi_a: Channel, phi_b: Channel, *, restarts: int = 8, seed=0,
                 overlap_restarts: int = 8, maxiter: int = 400) -> BswResult:
    """Bounds on ``sup_{a,b} tau_M(exp(ln Phi_A^dagger(a) + ln Phi_B^dagger(b)))``.

    ``a`` and ``b`` range over states of the two output algebras (the case
    ``R = C``).  The lower bound is the best value found by local search over
    faithful states together with the overlap witnesses (evaluated through the
    support limit).  The upper bound is the overlap value from an alternating
    maximization seeded at the best ``b``; the Golden-Thompson inequality
    ``tau(e^{ln X + ln Y}) <= tau(XY)`` makes it dominate the lower bound
    pointwise.
    """
    from .sdp import hermitian_basis

    A, B = phi_a.output, phi_b.output
    pa, pb = phi_a.adjoint(), phi_b.adjoint()
    rng = rng_from(seed)
    basis_a = np.array([g.vec() for g in hermitian_basis(A)])
    basis_b = np.array([g.vec() for g in hermitian_basis(B)])
    na = basis_a.shape[0]

    def g(a, b):
        return log_euclidean_trace(pa(a), pb(b))

    def neg(v):
        return -g(_exp_state(A, v[:na], basis_a), _exp_state(B, v[na:], basis_b))

    ov = overlap_constant(phi_a, phi_b, restarts=overlap_restarts, seed=rng)
    candidates = [(g(ov.a, ov.b), ov.a, ov.b)]
    starts = [np.zeros(na + basis_b.shape[0])]
    # interior point close to the overlap witnesses
    def log_coords(x, basis):
        blocks = []
        for blk in x.blocks:
            ev, U = np.linalg.eigh(blk)
            blocks.append((U * np.log(np.clip(ev, 1e-6 * ev.max(), None))) @ U.conj().T)
        return (basis.conj() @ x.algebra.element(blocks).vec()).real
    starts.append(np.concatenate([log_coords(ov.a, basis_a), log_coords(ov.b, basis_b)]))
    while len(starts) < restarts:
        starts.append(rng.standard_normal(na + basis_b.shape[0]))
    for v0 in starts[:max(restarts, 2)]:
        res = minimize(neg, v0, method="L-BFGS-B", options={"maxiter": maxiter})
        a, b = _exp_state(A, res.x[:na], basis_a), _exp_state(B, res.x[na:], basis_b)
        candidates.append((-res.fun, a, b))
    lower, a, b = max(candidates, key=lambda c: c[0])
    up = overlap_constant(phi_a, phi_b, restarts=overlap_restarts, seed=rng, init_b=[b])
    upper = max(up.value, ov.value)
    cb = None
    try:
        cb = cb_constant(phi_a, phi_b)
    except ValueError:
        pass
    return BswResult(float(lower), float(upper), a, b, cb,
                     {"candidates": [float(c[0]) for c in candidates]})
