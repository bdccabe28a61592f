"""Entropies, relative entropies and Kosaki-weighted Schatten norms.

All quantities use the natural logarithm and the weighted trace of the
algebra the arguments live in; plain arrays are read as matrix-trace elements.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .algebra import (
    SUPPORT_TOL,
    AlgElement,
    as_element,
    herm_eig,
    herm_power,
    partial_trace,
)

__all__ = [
    "von_neumann_entropy",
    "conditional_entropy",
    "relative_entropy",
    "schatten_norm",
    "kosaki_norm",
    "sandwiched_renyi_relative",
    "supported_in",
]


def _xlogx(ev: np.ndarray) -> float:
    ev = ev[ev > 0]
    return float(np.sum(ev * np.log(ev)))


def von_neumann_entropy(rho) -> float:
    """``-tau(rho log rho)`` with ``0 log 0 = 0``.

    Examples
    --------
    >>> round(von_neumann_entropy(np.eye(2) / 2), 12) == round(np.log(2), 12)
    True
    """
    rho = as_element(rho)
    eigs = herm_eig(rho)
    return -sum(w * _xlogx(ev) for w, (ev, _) in zip(rho.algebra.weights, eigs))


def conditional_entropy(rho_ab, dims: Sequence[int]) -> float:
    """``H(A|B) = H(rho_AB) - H(rho_B)`` for ``rho_AB`` on ``H_A (x) H_B``.

    ``dims = (d_A, d_B)``; the conditioning system is the second factor.
    """
    rho = as_element(rho_ab).matrix
    d_a, d_b = (int(d) for d in dims)
    if rho.shape != (d_a * d_b,) * 2:
        raise ValueError(f"state of shape {rho.shape} does not match split {tuple(dims)}")
    return von_neumann_entropy(rho) - von_neumann_entropy(partial_trace(rho, (d_a, d_b), (1,)))


def supported_in(rho, sigma, support_tol: float = SUPPORT_TOL, tol: float = 1e-10) -> bool:
    """Whether ``supp(rho)`` lies inside ``supp(sigma)``."""
    rho, sigma = as_element(rho), as_element(sigma, as_element(rho).algebra)
    P = herm_power(sigma, 0.0, support_tol)
    scale = max(1.0, rho.norm_op())
    for r, p in zip(rho.blocks, P.blocks):
        q = np.eye(p.shape[0]) - p
        if np.abs(q @ r @ q).max(initial=0.0) > tol * scale:
            return False
    return True


def relative_entropy(rho, sigma, support_tol: float = SUPPORT_TOL) -> float:
    """Umegaki relative entropy ``tau(rho log rho - rho log sigma)``.

    Returns ``inf`` when the support of ``rho`` is not contained in that of
    ``sigma``.
    """
    rho = as_element(rho)
    sigma = as_element(sigma, rho.algebra)
    if not supported_in(rho, sigma, support_tol):
        return np.inf
    val = 0.0
    eig_r = herm_eig(rho)
    eig_s = herm_eig(sigma)
    cut = support_tol * max(float(ev.max()) for ev, _ in eig_s)
    for w, (er, Ur), (es, Us) in zip(rho.algebra.weights, eig_r, eig_s):
        mask = es > cut
        log_s = (Us[:, mask] * np.log(es[mask])) @ Us[:, mask].conj().T
        rb = (Ur * er) @ Ur.conj().T
        val += w * (_xlogx(er) - np.trace(rb @ log_s).real)
    return float(val)


def schatten_norm(x, p: float) -> float:
    """``tau(|x|^p)^(1/p)``; ``p = inf`` gives the operator norm."""
    x = as_element(x)
    svs = [np.linalg.svd(b, compute_uv=False) for b in x.blocks]
    if np.isinf(p):
        return float(max(s.max(initial=0.0) for s in svs))
    return float(sum(w * np.sum(s ** p) for w, s in zip(x.algebra.weights, svs)) ** (1.0 / p))


def kosaki_norm(x, sigma, p: float, support_tol: float = SUPPORT_TOL) -> float:
    """``tau(|sigma^(1/2p) x sigma^(1/2p)|^p)^(1/p)``.

    At ``p = inf`` the weight disappears and the operator norm of ``x``
    compressed to the support of ``sigma`` is returned.
    """
    x = as_element(x)
    sigma = as_element(sigma, x.algebra)
    s = herm_power(sigma, 0.0 if np.isinf(p) else 1.0 / (2 * p), support_tol)
    return schatten_norm(s @ x @ s, p)


def sandwiched_renyi_relative(rho, sigma, p: float, support_tol: float = SUPPORT_TOL) -> float:
    """Sandwiched Renyi divergence ``D_p(rho || sigma)``.

    ``D_p = (1/(p-1)) log tau((sigma^((1-p)/2p) rho sigma^((1-p)/2p))^p)``,
    which is ``(p/(p-1)) log`` of the Kosaki norm of ``sigma^(-1/2) rho sigma^(-1/2)``.
    ``p = 1`` gives the Umegaki relative entropy and ``p = inf`` the max-divergence.
    """
    rho = as_element(rho)
    sigma = as_element(sigma, rho.algebra)
    if p < 1:
        raise ValueError("the sandwiched divergence is implemented for p >= 1")
    if p == 1:
        return relative_entropy(rho, sigma, support_tol)
    if not supported_in(rho, sigma, support_tol):
        return np.inf
    if np.isinf(p):
        s = herm_power(sigma, -0.5, support_tol)
        return float(np.log(schatten_norm(s @ rho @ s, np.inf)))
    s = herm_power(sigma, (1.0 - p) / (2.0 * p), support_tol)
    z = (s @ rho @ s).herm()
    q = sum(w * np.sum(np.clip(ev, 0, None) ** p)
            for w, (ev, _) in zip(z.algebra.weights, herm_eig(z)))
    return float(np.log(q) / (p - 1.0))
