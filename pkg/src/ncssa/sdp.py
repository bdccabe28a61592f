"""Small dense semidefinite programs solved by a log-barrier Newton method.

The generic solver handles

    minimize    c . y
    subject to  S(y) = F0 + sum_i y_i F_i  >= 0      (block-diagonal, Hermitian)

and returns a dual certificate ``Z >= 0`` with ``tr(Z F_i) = c_i`` recovered
from the last Newton step, so the duality gap is ``tr(S(y) Z)``.

On top of it, :func:`expectation_constrained_max` computes

    sup { tau_B(b x) : b >= 0, F(b) = 1_R }  =  inf { tau_R(Y) : F^dagger(Y) >= x }

for a unital completely positive ``F: B -> R`` and ``x >= 0``.  This covers the
``L_1^infty`` norm (``F = E_N``) and the inner problem of the ``c(t)`` constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .algebra import AlgElement, Algebra, as_element
from .channels import Channel

__all__ = [
    "LMIResult",
    "SDPResult",
    "SDPError",
    "solve_lmi",
    "hermitian_basis",
    "expectation_constrained_max",
]


class SDPError(RuntimeError):
    """The barrier method could not make progress."""


@dataclass
class LMIResult:
    y: np.ndarray
    primal: float
    dual: float
    gap: float
    Z: list
    residual: float
    iterations: int
    converged: bool


def _chol(S):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None


def _slack(F0, F, y):
    return [F0b + np.tensordot(y, Fb, axes=1) for F0b, Fb in zip(F0, F)]


def _barrier(S_blocks):
    """``-log det S`` and the Cholesky factors, or ``None`` if not PD."""
    val, facs = 0.0, []
    for S in S_blocks:
        L = _chol(S)
        if L is None:
            return None, None
        facs.append(L)
        val -= 2.0 * np.sum(np.log(np.diagonal(L).real))
    return val, facs


def solve_lmi(c, F0, F, y0, *, gap_tol: float = 1e-9, mu: float = 20.0,
              max_newton: int = 400, t0: float | None = None) -> LMIResult:
    """Barrier path following from a strictly feasible ``y0``.

    Parameters
    ----------
    c : (m,) array
    F0 : list of (n_b, n_b) Hermitian arrays
    F : list of (m, n_b, n_b) Hermitian arrays, one per block
    y0 : (m,) array with ``S(y0)`` positive definite
    gap_tol : float
        Absolute duality gap at which to stop.
    """
    c = np.asarray(c, dtype=float)
    y = np.asarray(y0, dtype=float).copy()
    m = c.size
    n_tot = sum(b.shape[0] for b in F0)
    phi, facs = _barrier(_slack(F0, F, y))
    if phi is None:
        raise SDPError("starting point is not strictly feasible")
    if m == 0:
        return LMIResult(y, 0.0, 0.0, 0.0, [], 0.0, 0, True)
    t = t0 if t0 is not None else max(1.0, n_tot / max(abs(c @ y), 1e-12))
    e = np.concatenate([np.eye(b.shape[0]).ravel() for b in F0])
    e = np.concatenate([e, np.zeros_like(e)])

    def newton(facs):
        cols = []
        for L, Fb in zip(facs, F):
            Linv = solve_triangular(L, np.eye(L.shape[0]), lower=True)
            cols.append((Linv[None] @ Fb @ Linv.conj().T[None]).reshape(m, -1))
        A = np.concatenate(cols, axis=1)
        A = np.concatenate([A.real, A.imag], axis=1).T          # columns: scaled F_i
        rhs = A.T @ e - t * c
        _, R = np.linalg.qr(A)
        u = solve_triangular(R, rhs, trans="T")
        dy = solve_triangular(R, u)
        lam = float(np.linalg.norm(A @ dy))
        return dy, lam, A

    iters = 0
    best = None
    while True:
        # centering
        for _ in range(100):
            dy, lam, A = newton(facs)
            iters += 1
            if lam < 0.5:
                gap = (n_tot - dy @ (A.T @ e)) / t
                best = (y.copy(), dy.copy(), t, facs, gap)
            if lam < 1e-3:
                break
            f0 = t * (c @ y) + phi
            slope = -(lam ** 2)
            s = 1.0
            while True:
                yn = y + s * dy
                phin, facsn = _barrier(_slack(F0, F, yn))
                if phin is not None and t * (c @ yn) + phin <= f0 + 0.25 * s * slope:
                    break
                s *= 0.5
                if s < 1e-14:
                    break
            if s < 1e-14:
                break
            y, phi, facs = yn, phin, facsn
            if iters > max_newton:
                break
        if best is not None and best[4] <= gap_tol:
            break
        if iters > max_newton:
            break
        t *= mu
        phi, facs = _barrier(_slack(F0, F, y))
    if best is None:
        raise SDPError("barrier method never reached the central path")
    y, dy, t, facs, gap = best
    Z = []
    for L, Fb in zip(facs, F):
        n = L.shape[0]
        Ft = np.tensordot(dy, Fb, axes=1)
        Linv = solve_triangular(L, np.eye(n), lower=True)
        Ztil = (np.eye(n) - Linv @ Ft @ Linv.conj().T) / t
        Zb = Linv.conj().T @ Ztil @ Linv
        Z.append((Zb + Zb.conj().T) / 2)
    resid = np.array([sum(np.trace(Zb @ Fb[i]).real for Zb, Fb in zip(Z, F)) for i in range(m)]) - c
    primal = float(c @ y)
    dual = float(-sum(np.trace(F0b @ Zb).real for F0b, Zb in zip(F0, Z)))
    return LMIResult(y, primal, dual, primal - dual, Z, float(np.max(np.abs(resid))), iters,
                     bool(primal - dual <= gap_tol))


def hermitian_basis(alg: Algebra) -> list[AlgElement]:
    """Frobenius-orthonormal basis of the Hermitian elements, block by block."""
    basis = []
    for k, d in enumerate(alg.dims):
        for i in range(d):
            for j in range(i, d):
                blocks = [np.zeros((dd, dd), dtype=complex) for dd in alg.dims]
                if i == j:
                    blocks[k][i, i] = 1.0
                    basis.append(alg.element(blocks))
                    continue
                re = [b.copy() for b in blocks]
                re[k][i, j] = re[k][j, i] = 1 / np.sqrt(2)
                basis.append(alg.element(re))
                im = [b.copy() for b in blocks]
                im[k][i, j], im[k][j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
                basis.append(alg.element(im))
    return basis


@dataclass
class SDPResult:
    """Outcome of :func:`expectation_constrained_max`.

    ``value`` is the primal ``tau_R(Y)`` (an upper bound), ``lower`` the
    objective of the witness ``b`` after rescaling it to exact feasibility.
    """

    value: float
    lower: float
    gap: float
    witness: AlgElement | None
    dual: AlgElement | None
    iterations: int = 0
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


def _support_frames(P: AlgElement, tol: float):
    frames = []
    lam_max = max(float(np.linalg.eigvalsh(b).max()) for b in P.blocks)
    for b in P.blocks:
        ev, U = np.linalg.eigh((b + b.conj().T) / 2)
        frames.append((U[:, ev > tol * lam_max], ev[ev > tol * lam_max]))
    return frames


def expectation_constrained_max(x, F: Channel, *, gap_tol: float = 1e-9,
                                support_tol: float = 1e-12) -> SDPResult:
    """``sup {tau_B(b x) : b >= 0, F(b) = 1}`` with its dual ``inf tau_R(Y)``.

    ``F`` must be unital and completely positive from ``B`` to ``R``; ``x``
    must be positive in ``B``.  Returns ``+inf`` if ``x`` is not supported
    inside the support of ``F^dagger(1)``.
    """
    B, R = F.input, F.output
    x = as_element(x, B).herm()
    Fd = F.adjoint()
    scale = x.norm_op()
    if scale == 0.0:
        return SDPResult(0.0, 0.0, 0.0, B.zeros(), R.zeros())
    xs = x / scale
    frames = _support_frames(Fd(R.identity()), support_tol)
    for (V, _), xb in zip(frames, xs.blocks):
        Pb = V @ V.conj().T
        resid = xb - Pb @ xb @ Pb
        if np.max(np.abs(resid), initial=0.0) > 1e-9:
            return SDPResult(np.inf, np.inf, np.nan, None, None,
                             diagnostics={"reason": "x not supported on F^dagger(1)"})
    active = [k for k, (V, _) in enumerate(frames) if V.shape[1] > 0]
    basis = hermitian_basis(R)
    c = np.array([g.trace().real for g in basis])
    images = [Fd(g) for g in basis]
    F0 = [-(frames[k][0].conj().T @ xs.blocks[k] @ frames[k][0]) for k in active]
    Fi = [np.array([frames[k][0].conj().T @ im.blocks[k] @ frames[k][0] for im in images])
          for k in active]
    mu_min = min(float(ev.min()) for k, (_, ev) in enumerate(frames) if k in active)
    s = 2.0 / mu_min
    y0 = s * np.array([g.trace().real for g in basis])
    res = solve_lmi(c, F0, Fi, y0, gap_tol=gap_tol / 4)

    # dual witness b in B (Frobenius pairing to weighted trace)
    blocks = [np.zeros((d, d), dtype=complex) for d in B.dims]
    for Zb, k in zip(res.Z, active):
        V = frames[k][0]
        blocks[k] = V @ Zb @ V.conj().T / B.weights[k]
    b = B.element(blocks).herm()
    b = _clip_positive(b)
    Fb = F(b).herm()
    top = max(float(np.linalg.eigvalsh(blk).max()) for blk in Fb.blocks)
    if top > 1.0:
        b = b / top
    lower = float((b @ xs).trace().real) * scale
    Y = R.from_vec(sum(yi * g.vec() for yi, g in zip(res.y, basis))) * scale
    value = res.primal * scale
    return SDPResult(value, lower, value - lower, b, Y, res.iterations, bool(value - lower <= gap_tol),
                     {"feasibility_residual": res.residual, "barrier_gap": res.gap * scale})


def _clip_positive(b: AlgElement) -> AlgElement:
    blocks = []
    for blk in b.blocks:
        ev, U = np.linalg.eigh(blk)
        blocks.append((U * np.clip(ev, 0.0, None)) @ U.conj().T)
    return b.algebra.element(blocks)
