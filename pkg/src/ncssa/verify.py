"""Inequality auditors, the commuting-square detector and the generalized CMI.

Every auditor returns an :class:`InequalityReport` with ``gap = lhs - rhs``;
a report passes when ``gap >= -tol``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from .algebra import AlgElement, as_element, full_algebra
from .channels import (
    Channel,
    as_full_output,
    compose,
    id_tensor,
    partial_trace_channel,
    rng_from,
)
from .constants import cb_constant, overlap_constant, state_dependent_constant
from .entropy import conditional_entropy, relative_entropy, von_neumann_entropy
from .inclusions import Inclusion, nested_inclusion, tensor_factor_inclusion, trivial_inclusion
from .kappa import StateExpectation, kappa

__all__ = [
    "TOLERANCES",
    "InequalityReport",
    "check_theorem_A",
    "check_theorem_B",
    "check_theorem_C",
    "CommutingSquare",
    "detect_commuting_square",
    "gcmi",
    "GcmiResult",
    "minimize_gcmi",
]

TOLERANCES = {"A": 1e-8, "B": 1e-8, "C": 1e-7, "SSA": 1e-9, "DPI": 1e-9, "MU": 1e-8,
              "PetzSSA": 1e-8}


@dataclass
class InequalityReport:
    theorem_id: str
    lhs: float
    rhs: float
    gap: float
    constant_used: float
    seed: int | None
    tol: float
    passed: bool
    solver_diag: dict = field(default_factory=dict)

    @classmethod
    def build(cls, theorem_id, lhs, rhs, constant, seed=None, tol=None, diag=None):
        tol = TOLERANCES.get(theorem_id, 1e-8) if tol is None else float(tol)
        lhs, rhs = float(lhs), float(rhs)
        gap = lhs - rhs if np.isfinite(lhs) or np.isfinite(rhs) else np.inf
        return cls(theorem_id, lhs, rhs, float(gap), float(constant), seed, tol,
                   bool(gap >= -tol), dict(diag or {}))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _as_square(rho, d: int) -> np.ndarray:
    m = rho.matrix if isinstance(rho, AlgElement) else np.asarray(rho, dtype=complex)
    if m.shape != (d, d):
        raise ValueError(f"state has shape {m.shape}, expected {(d, d)}")
    return m


def _entropies_a(rho_mc, phi_a: Channel, phi_b: Channel, c_dim: int):
    phi_a, phi_b = as_full_output(phi_a), as_full_output(phi_b)
    if phi_a.input != phi_b.input or not phi_a.input.is_full:
        raise ValueError("channels must share a full matrix input algebra")
    if any(w != 1.0 for w in (*phi_a.input.weights, *phi_a.output.weights,
                                    *phi_b.output.weights)):
        raise ValueError("tensoring with C needs matrix traces")
    d_m, d_a, d_b = phi_a.input.dims[0], phi_a.output.dims[0], phi_b.output.dims[0]
    m = _as_square(rho_mc, d_m * c_dim)
    big_a, big_b = id_tensor(phi_a, c_dim), id_tensor(phi_b, c_dim)
    rho = big_a.input.element([m])
    rho_ac, rho_bc = big_a(rho).matrix, big_b(rho).matrix
    h = {"H(A|C)": conditional_entropy(rho_ac, (d_a, c_dim)),
         "H(B|C)": conditional_entropy(rho_bc, (d_b, c_dim)),
         "H(M|C)": conditional_entropy(m, (d_m, c_dim))}
    return h, phi_a, phi_b, big_a, big_b, rho


def check_theorem_A(rho_mc, phi_a: Channel, phi_b: Channel, c_dim: int = 1, *,
                    constant="cb", seed=None, theorem_id: str = "A") -> InequalityReport:
    """``H(A|C) + H(B|C) >= H(M|C) + log(1/c)`` with channels acting on ``M``.

    ``constant`` is ``"cb"`` (the Choi-norm constant), ``"state"`` (the
    state-dependent constant ``c(rho)`` of the tensored channels with
    ``R = B(H_C)``) or a number.
    """
    h, phi_a, phi_b, big_a, big_b, rho = _entropies_a(rho_mc, phi_a, phi_b, c_dim)
    diag = dict(h)
    if isinstance(constant, str):
        if constant == "cb":
            c = cb_constant(phi_a, phi_b)
        elif constant == "state":
            d_a = phi_a.output.dims[0]
            r_inc = tensor_factor_inclusion((d_a, c_dim), (1,))
            c = state_dependent_constant(rho, big_a, big_b, r_inc)
        else:
            raise ValueError(f"unknown constant {constant!r}")
        diag["constant"] = constant
    else:
        c = float(constant)
    if not c > 0:
        raise ValueError("the constant must be positive")
    lhs = h["H(A|C)"] + h["H(B|C)"]
    rhs = h["H(M|C)"] + np.log(1.0 / c)
    return InequalityReport.build(theorem_id, lhs, rhs, c, seed, diag=diag)


def check_theorem_B(rho, phi_a: Channel, phi_b: Channel, r_inc: Inclusion | None = None, *,
                    overlap=None, restarts: int = 8, seed=0,
                    theorem_id: str = "B") -> InequalityReport:
    """``H(Phi_A rho) + H(Phi_B rho) >= H(rho) + H(E_R Phi_A rho) + log(1/c)``.

    ``c`` is the larger of the overlap constant found by alternating
    maximization (seeded with ``Phi_B(rho)``) and the state-dependent
    ``c(rho)``.  Both are lower bounds of the constant in the inequality, so
    a negative gap cannot be caused by an underestimated constant.
    ``overlap`` may supply a precomputed overlap value.
    """
    if phi_a.input != phi_b.input:
        raise ValueError("channels must share their input algebra")
    rho = as_element(rho, phi_a.input)
    if r_inc is None:
        r_inc = trivial_inclusion(phi_a.output, 1.0)
    rho_a, rho_b = phi_a(rho).herm(), phi_b(rho).herm()
    if overlap is None:
        res = overlap_constant(phi_a, phi_b, r_inc, restarts=restarts, seed=seed,
                               init_b=[rho_b])
        c_overlap, conv = res.value, res.converged
    else:
        c_overlap, conv = float(getattr(overlap, "value", overlap)), True
    c_rho = state_dependent_constant(rho, phi_a, phi_b, r_inc)
    c = max(c_overlap, c_rho)
    h_r = von_neumann_entropy(r_inc.cond_exp(rho_a).herm())
    h_m = von_neumann_entropy(rho)
    lhs = von_neumann_entropy(rho_a) + von_neumann_entropy(rho_b)
    rhs = h_m + h_r + np.log(1.0 / c)
    diag = {"c_overlap": c_overlap, "c_rho": c_rho, "overlap_converged": conv,
            "gap_c_rho": float(lhs - (h_m + h_r + np.log(1.0 / c_rho))),
            "H(E_R Phi_A rho)": h_r}
    return InequalityReport.build(theorem_id, lhs, rhs, c, seed if isinstance(seed, int) else None,
                                  diag=diag)


def check_theorem_C(rho, sigma, phi_a: Channel, phi_b: Channel, expectation: StateExpectation,
                    *, seed=None, theorem_id: str = "C", **quad) -> InequalityReport:
    """``D(rho||sigma) + D(E_R Phi_B rho || E_R Phi_B sigma)
    >= D(Phi_A rho || Phi_A sigma) + D(Phi_B rho || Phi_B sigma) - kappa``.

    ``quad`` is forwarded to :func:`ncssa.kappa.kappa`.  An infinite left-hand
    side is a vacuous pass and is flagged in the diagnostics.
    """
    rho = as_element(rho, phi_a.input)
    sigma = as_element(sigma, phi_a.input)
    E = expectation.adjoint_map
    rb, sb = phi_b(rho).herm(), phi_b(sigma).herm()
    d1 = relative_entropy(rho, sigma)
    d2 = relative_entropy(E(rb).herm(), E(sb).herm())
    lhs = d1 + d2
    if not np.isfinite(lhs):
        return InequalityReport.build(theorem_id, np.inf, np.nan, np.nan, seed,
                                      diag={"vacuous": True})
    d3 = relative_entropy(phi_a(rho).herm(), phi_a(sigma).herm())
    d4 = relative_entropy(rb, sb)
    k = kappa(rho, sigma, phi_a, phi_b, expectation, **quad)
    rhs = d3 + d4 - k.kappa
    diag = {"vacuous": False, "kappa": k.kappa, "quad_error": k.quadrature_error_estimate,
            "kappa_converged": k.converged, "D(rho||sigma)": d1, "D(E_R Phi_B)": d2,
            "D(Phi_A)": d3, "D(Phi_B)": d4}
    return InequalityReport.build(theorem_id, lhs, rhs, k.kappa, seed, diag=diag)


class CommutingSquare(NamedTuple):
    c: float
    is_commuting_square: bool
    operator_error: float
    agree: bool


def detect_commuting_square(a_inc: Inclusion, b_inc: Inclusion, r_inc: Inclusion, *,
                            restarts: int = 8, seed=0, c_tol: float = 1e-6,
                            op_tol: float = 1e-8) -> CommutingSquare:
    """Overlap constant of ``(E_A, E_B)`` with ``R in A`` and the operator test
    ``E_A E_B = E_B E_A = E_R`` on ``M``.

    All three traces must be induced from ``M``.  ``agree`` reports whether
    ``|c - 1| <= c_tol`` exactly when the operator error is ``<= op_tol``.
    """
    for name, inc in (("A", a_inc), ("B", b_inc), ("R", r_inc)):
        if not inc.is_induced:
            raise ValueError(f"the trace on {name} is not induced from the ambient algebra")
    M = a_inc.ambient
    if b_inc.ambient != M or r_inc.ambient != M:
        raise ValueError("subalgebras must share the ambient algebra")
    r_in_a = nested_inclusion(r_inc, a_inc)
    res = overlap_constant(a_inc.cond_exp, b_inc.cond_exp, r_in_a, restarts=restarts, seed=seed)
    pa, pb, pr = a_inc.projection, b_inc.projection, r_inc.projection
    err = max(float(np.abs(compose(pa, pb).coord - pr.coord).max()),
              float(np.abs(compose(pb, pa).coord - pr.coord).max()))
    op = err <= op_tol
    return CommutingSquare(res.value, op, err, bool((abs(res.value - 1.0) <= c_tol) == op))


# --------------------------------------------------------------------------
# generalized conditional mutual information


def gcmi(rho_mc, phi_a: Channel, phi_b: Channel, c_dim: int = 1) -> float:
    """``H(A|C) + H(B|C) - H(M|C)`` after applying the channels to ``M``."""
    h = _entropies_a(rho_mc, phi_a, phi_b, c_dim)[0]
    return h["H(A|C)"] + h["H(B|C)"] - h["H(M|C)"]


@dataclass
class GcmiResult:
    value: float
    rho: np.ndarray
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def _log_floor(m: np.ndarray, floor: float = 1e-16) -> np.ndarray:
    ev, U = np.linalg.eigh((m + m.conj().T) / 2)
    return (U * np.log(np.maximum(ev, floor))) @ U.conj().T


class _GcmiObjective:
    """``f(rho) = H(AC) + H(BC) - H(MC) - H(C)`` with ``rho = G G^* / tr(G G^*)``."""

    def __init__(self, phi_a: Channel, phi_b: Channel, c_dim: int):
        self.big_a, self.big_b = id_tensor(phi_a, c_dim), id_tensor(phi_b, c_dim)
        d_m = phi_a.input.dims[0]
        self.n = d_m * c_dim
        self.to_c = partial_trace_channel((d_m, c_dim), (1,))
        self.adj = [ch.adjoint() for ch in (self.big_a, self.big_b, self.to_c)]
        self.alg = full_algebra(self.n)

    def rho(self, v: np.ndarray) -> np.ndarray:
        n = self.n
        G = (v[: n * n] + 1j * v[n * n:]).reshape(n, n)
        R = G @ G.conj().T
        return G, R / np.trace(R).real

    def value(self, rho: np.ndarray) -> float:
        x = self.alg.element([rho])
        return (von_neumann_entropy(self.big_a(x)) + von_neumann_entropy(self.big_b(x))
                - von_neumann_entropy(x) - von_neumann_entropy(self.to_c(x)))

    def __call__(self, v: np.ndarray):
        G, rho = self.rho(v)
        x = self.alg.element([rho])
        outs = [ch(x).herm() for ch in (self.big_a, self.big_b, self.to_c)]
        f = (von_neumann_entropy(outs[0]) + von_neumann_entropy(outs[1])
             - von_neumann_entropy(x) - von_neumann_entropy(outs[2]))
        # d H(L rho) / d rho = -L^dagger(log L rho) up to multiples of 1
        logs = [adj(o.algebra.element([_log_floor(o.matrix)])).matrix
                for adj, o in zip(self.adj, outs)]
        grad = -logs[0] - logs[1] + _log_floor(rho) + logs[2]
        grad = (grad + grad.conj().T) / 2
        s = np.trace(G @ G.conj().T).real
        M = 2.0 * (grad @ G - np.trace(grad @ rho).real * G) / s
        return float(f), np.concatenate([M.real.ravel(), M.imag.ravel()])


def _sqrt_factor(rho: np.ndarray) -> np.ndarray:
    ev, U = np.linalg.eigh((rho + rho.conj().T) / 2)
    return (U * np.sqrt(np.clip(ev, 0, None))) @ U.conj().T


def minimize_gcmi(phi_a: Channel, phi_b: Channel, c_dim: int = 1, *, restarts: int = 8,
                  seed=0, maxiter: int = 500, init: Sequence[np.ndarray] = ()) -> GcmiResult:
    """Best-found upper bound on ``inf_rho gcmi(rho)`` at fixed ``|C|``.

    ``rho = G G^* / tr(G G^*)`` with ``G`` square, i.e. a purification with
    environment dimension ``d_M |C|``.  Each start runs L-BFGS with the
    analytic gradient; ``init`` adds user-supplied starting states.
    """
    phi_a, phi_b = as_full_output(phi_a), as_full_output(phi_b)
    obj = _GcmiObjective(phi_a, phi_b, c_dim)
    n = obj.n
    rng = rng_from(seed)
    starts = []
    for r in init:
        G = _sqrt_factor(_as_square(r, n))
        starts.append(np.concatenate([G.real.ravel(), G.imag.ravel()]))
    starts.append(np.concatenate([np.eye(n).ravel(), np.zeros(n * n)]))
    while len(starts) < restarts + len(init):
        starts.append(rng.standard_normal(2 * n * n))
    best, runs = None, []
    t0 = time.perf_counter()
    for v0 in starts:
        res = minimize(obj, v0, jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "gtol": 1e-10, "ftol": 1e-14})
        rho = obj.rho(res.x)[1]
        val = obj.value(rho)
        runs.append(val)
        if best is None or val < best[0]:
            best = (val, rho, bool(res.success))
    # the starting points themselves are valid candidates
    for r in init:
        val = obj.value(_as_square(r, n))
        if val < best[0]:
            best = (val, _as_square(r, n), True)
    return GcmiResult(float(best[0]), best[1], best[2],
                      {"restart_values": runs, "seconds": time.perf_counter() - t0})
