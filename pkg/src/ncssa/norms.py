"""Amalgamated and conditional noncommutative norms relative to a subalgebra.

For ``N`` included in ``M`` and positive ``x``:

* ``L_1^p``:    ``inf_{sigma in D(N)} || sigma^(-1/2p') x sigma^(-1/2p') ||_p``
* ``L_1^inf``:  ``inf { tau_N(Y) : iota(Y) >= x }`` (a small SDP)
* ``L_inf^1``:  ``|| E_N(x) ||_inf``

The ``L_1^p`` infimum is minimized over ``sigma = exp(h) / l(exp h)`` with an
analytic gradient (Daleckii-Krein formula for the exponential).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .algebra import AlgElement, PositivityError, as_element, herm_eig, herm_power
from .channels import rng_from
from .entropy import schatten_norm
from .inclusions import Inclusion, tensor_factor_inclusion
from .sdp import SDPResult, expectation_constrained_max, hermitian_basis

__all__ = [
    "NormResult",
    "l1_inf_norm",
    "linf_1_norm",
    "amalgamated_L1p_norm",
    "weighted_amalgamated_L1p",
    "sandwiched_renyi_conditional",
]


def l1_inf_norm(x, inc: Inclusion, *, gap_tol: float = 1e-9) -> SDPResult:
    """``||x||_{L_1^inf(N in M)}`` with a dual witness ``a >= 0, E_N(a) = 1``.

    ``result.value`` is ``tau_N(Y)`` for a feasible ``Y``; ``result.lower`` is
    ``tau_M(a x)`` for the (exactly feasible) witness ``result.witness``.
    """
    x = as_element(x, inc.ambient)
    N = inc.sub
    if N.n_blocks == 1 and N.dims[0] == 1:
        return _l1_inf_trivial(x, inc)
    return expectation_constrained_max(x, inc.cond_exp, gap_tol=gap_tol)


def _l1_inf_trivial(x: AlgElement, inc: Inclusion) -> SDPResult:
    w_n = inc.sub.weights[0]
    best = (-np.inf, 0, None)
    for k, (ev, U) in enumerate(herm_eig(x)):
        if ev[-1] > best[0]:
            best = (float(ev[-1]), k, U[:, -1])
    lam, k, v = best
    M = inc.ambient
    blocks = [np.zeros((d, d), dtype=complex) for d in M.dims]
    blocks[k] = w_n * np.outer(v, v.conj()) / M.weights[k]
    a = M.element(blocks)
    val = w_n * lam
    return SDPResult(val, float((a @ x).trace().real), 0.0, a, inc.sub.identity() * lam)


def linf_1_norm(x, inc: Inclusion) -> float:
    """``||E_N(x)||_inf``."""
    return schatten_norm(inc.cond_exp(as_element(x, inc.ambient)), np.inf)


@dataclass
class NormResult:
    """Value of an amalgamated norm together with the optimal density.

    ``exponent`` is ``(p/(p-1)) log(value / scale)`` where ``scale`` is the
    trace of ``x``; for a state this is the Renyi-type conditional quantity.
    """

    value: float
    exponent: float
    sigma: AlgElement | None
    converged: bool
    iterations: int = 0
    restarts_agree: bool = True
    diagnostics: dict = field(default_factory=dict)


def _expm_divided_differences(nu: np.ndarray) -> np.ndarray:
    a, b = np.meshgrid(nu, nu, indexing="ij")
    diff = a - b
    small = np.abs(diff) < 1e-12
    safe = np.where(small, 1.0, diff)
    L = np.where(small, np.exp((a + b) / 2), np.exp(b) * np.expm1(diff) / safe)
    return L


class _Objective:
    """``J(h) = (1/eps) [ (1/p) log tau_M(z^p) + eps log l(e^h) ]``.

    ``z = x^(1/2) iota(e^(-eps h)) x^(1/2)`` and ``l`` is the normalization
    functional ``sum_k c_k tr(.)`` on ``N``.
    """

    def __init__(self, xs: AlgElement, inc: Inclusion, p: float, norm_weights: Sequence[float]):
        self.inc, self.p = inc, p
        self.eps = 1.0 - 1.0 / p
        self.xh = herm_power(xs, 0.5)
        self.c = np.asarray(norm_weights, dtype=float)
        self.basis = hermitian_basis(inc.sub)
        self.basis_mat = np.array([g.vec() for g in self.basis])  # (m, dim N)
        self.n_calls = 0

    def to_h(self, v: np.ndarray) -> AlgElement:
        return self.inc.sub.from_vec(v @ self.basis_mat)

    def from_h(self, h: AlgElement) -> np.ndarray:
        return (self.basis_mat.conj() @ h.vec()).real

    def __call__(self, v: np.ndarray):
        self.n_calls += 1
        p, eps, inc = self.p, self.eps, self.inc
        N, M = inc.sub, inc.ambient
        h = self.to_h(v).herm()
        eig_h = [np.linalg.eigh(b) for b in h.blocks]
        shift = max(float(mu.max()) for mu, _ in eig_h)
        # exp(-eps h) and the normalization, both shifted for stability
        g_blocks, ell = [], 0.0
        for (mu, U), ck in zip(eig_h, self.c):
            g_blocks.append((U * np.exp(-eps * (mu - shift))) @ U.conj().T)
            ell += ck * np.sum(np.exp(mu - shift))
        G = inc.embed(N.element(g_blocks))
        z = (self.xh @ G @ self.xh).herm()
        eig_z = [np.linalg.eigh(b) for b in z.blocks]
        T = sum(w * np.sum(np.clip(ev, 0, None) ** p) for w, (ev, _) in zip(M.weights, eig_z))
        if T <= 0:
            raise PositivityError("x is zero on the relevant support")
        J = (np.log(T) / p + eps * np.log(ell)) / eps  # the shifts cancel
        # gradient
        zp = M.element([(U * np.clip(ev, 0, None) ** (p - 1)) @ U.conj().T for ev, U in eig_z])
        EQ = inc.cond_exp(self.xh @ zp @ self.xh)
        grad_blocks = []
        for k, ((mu, U), ck) in enumerate(zip(eig_h, self.c)):
            Lk = _expm_divided_differences(-eps * (mu - shift))
            Gam = U @ (Lk * (U.conj().T @ EQ.blocks[k] @ U)) @ U.conj().T
            eh = (U * np.exp(mu - shift)) @ U.conj().T
            grad_blocks.append(-N.weights[k] * Gam / T + ck * eh / ell)
        grad_el = N.element(grad_blocks)
        grad = (self.basis_mat.conj() @ grad_el.vec()).real
        return float(J), grad


def _minimize_amalgamated(x: AlgElement, inc: Inclusion, p: float, norm_weights, *,
                          restarts: int, seed, gtol: float, maxiter: int,
                          init: AlgElement | None = None) -> NormResult:
    scale = x.trace().real
    if scale <= 0:
        return NormResult(0.0, -np.inf, None, True)
    xs = x / scale
    obj = _Objective(xs, inc, p, norm_weights)
    N = inc.sub
    rng = rng_from(seed)

    starts = []
    if init is not None:
        starts.append(init)
    ex = inc.cond_exp(xs).herm()
    lam_max = max(float(np.linalg.eigvalsh(b).max()) for b in ex.blocks)
    starts.append(ex + N.identity() * (1e-3 * lam_max))
    starts.append(N.identity())
    while len(starts) < max(restarts, 1):
        blocks = []
        for d in N.dims:
            Gm = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            blocks.append(Gm @ Gm.conj().T + 0.1 * np.eye(d))
        starts.append(N.element(blocks))
    starts = starts[:max(restarts, 1)]

    runs = []
    for s0 in starts:
        h0 = obj.from_h(_log_positive(s0))
        res = minimize(obj, h0, jac=True, method="BFGS", options={"gtol": gtol, "maxiter": maxiter})
        runs.append(res)
    best = min(runs, key=lambda r: r.fun)
    Jvals = np.array([r.fun for r in runs])
    agree = bool(np.ptp(Jvals) <= 1e-7 * max(1.0, abs(best.fun)))
    gnorm = float(np.linalg.norm(obj(best.x)[1]))
    h = obj.to_h(best.x).herm()
    eh = _exp_herm(h)
    ell = sum(ck * np.trace(b).real for ck, b in zip(obj.c, eh.blocks))
    sigma = eh / ell
    eps = obj.eps
    value = float(np.exp(eps * best.fun) * scale)
    exponent = float(best.fun)
    return NormResult(value, exponent, sigma, gnorm <= 1e-6, int(sum(r.nit for r in runs)), agree,
                      {"grad_norm": gnorm, "restart_values": Jvals.tolist(),
                       "function_calls": obj.n_calls})


def _log_positive(s: AlgElement) -> AlgElement:
    blocks = []
    for b in s.blocks:
        ev, U = np.linalg.eigh((b + b.conj().T) / 2)
        ev = np.clip(ev, 1e-12 * max(ev.max(), 1e-300), None)
        blocks.append((U * np.log(ev)) @ U.conj().T)
    return s.algebra.element(blocks)


def _exp_herm(h: AlgElement) -> AlgElement:
    blocks = []
    for b in h.blocks:
        ev, U = np.linalg.eigh(b)
        blocks.append((U * np.exp(ev)) @ U.conj().T)
    return h.algebra.element(blocks)


def amalgamated_L1p_norm(x, inc: Inclusion, p: float, *, restarts: int = 8, seed=0,
                         gtol: float = 1e-11, maxiter: int = 3000) -> NormResult:
    """``||x||_{L_1^p(N in M)}`` for positive ``x``.

    ``p = 1`` returns ``tau(x)`` and ``p = inf`` the ``L_1^inf`` SDP value; no
    optimization happens at the endpoints.
    """
    x = as_element(x, inc.ambient)
    if not x.is_positive():
        raise PositivityError("the amalgamated norm is implemented for positive elements")
    if p < 1:
        raise ValueError("p must be at least 1")
    if p == 1:
        return NormResult(x.trace().real, np.nan, None, True)
    if np.isinf(p):
        r = l1_inf_norm(x, inc)
        return NormResult(r.value, np.nan, None, r.converged, r.iterations, True,
                          {"gap": r.gap})
    return _minimize_amalgamated(x, inc, p, inc.sub.weights, restarts=restarts, seed=seed,
                                 gtol=gtol, maxiter=maxiter)


def weighted_amalgamated_L1p(x, inc: Inclusion, sigma_tr, p: float, *, restarts: int = 8,
                             seed=0, gtol: float = 1e-11, maxiter: int = 3000,
                             commute_tol: float = 1e-10) -> NormResult:
    """Weighted ``L_1^p`` norm with weight ``sigma_tr`` in ``M``.

    Infimum over ``gamma >= 0`` in ``N`` with ``tau_M(gamma sigma_tr) = 1`` of
    the Kosaki norm ``|| gamma^(-1/2p') x gamma^(-1/2p') ||_{p, sigma_tr}``.
    ``sigma_tr`` must commute with the image of ``N``.
    """
    x = as_element(x, inc.ambient)
    sig = as_element(sigma_tr, inc.ambient)
    if not sig.is_positive():
        raise PositivityError("weight must be positive")
    for k, i, j in inc.sub.matrix_units():
        e = inc.embed(inc.sub.matrix_unit(k, i, j))
        if (sig @ e - e @ sig).norm_op() > commute_tol * max(1.0, sig.norm_op()):
            raise ValueError("weight does not commute with the subalgebra")
    if p == 1:
        return NormResult((x @ herm_power(sig, 0.0)).trace().real, np.nan, None, True)
    c = [(inc.embed(inc.sub.matrix_unit(k, 0, 0)) @ sig).trace().real for k in range(inc.sub.n_blocks)]
    s = herm_power(sig, 1.0 / (2.0 * p)) if not np.isinf(p) else herm_power(sig, 0.0)
    xw = (s @ x @ s).herm()
    if np.isinf(p):
        raise ValueError("the weighted norm is implemented for finite p")
    return _minimize_amalgamated(xw, inc, p, c, restarts=restarts, seed=seed, gtol=gtol,
                                 maxiter=maxiter)


def sandwiched_renyi_conditional(rho_ab, dims: Sequence[int], p: float, **kw) -> float:
    """``H_p(A|B) = (p/(p-1)) log ||rho_AB||_{L_1^p(B(H_B) in B(H_A (x) H_B))}``.

    With this sign convention ``H_p(A|B) -> -H(A|B)`` as ``p -> 1``.
    """
    d_a, d_b = (int(d) for d in dims)
    inc = tensor_factor_inclusion((d_a, d_b), (1,))
    rho = as_element(rho_ab, inc.ambient)
    res = amalgamated_L1p_norm(rho, inc, p, **kw)
    return res.exponent + np.log(rho.trace().real) * p / (p - 1.0)
