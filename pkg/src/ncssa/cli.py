"""Command-line interface: ``ncssa gen``, ``ncssa constant`` and ``ncssa audit``.

Exit codes: 0 success, 1 invalid input, 2 solver non-convergence, 3 audit
failure.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .channels import random_channel, random_state, rng_from
from .constants import bsw_constant, cb_constant, frank_lieb_overlap, overlap_constant
from .instances import (
    build_commuting_square,
    build_dpi_instance,
    build_improved_dpi_instance,
    build_mub_instance,
    build_partial_trace_instance,
    build_petz_instance,
    random_theorem_a_instance,
    random_theorem_b_instance,
)
from .io import (
    SCHEMA_VERSION,
    SchemaError,
    channel_pair,
    channel_to_json,
    dumps,
    element_from_json,
    element_to_json,
    inclusion_to_json,
    loads_instance,
    povm_from_json,
    povm_to_json,
)
from .kappa import factor_expectation, kappa, trivial_expectation
from .verify import check_theorem_A, check_theorem_B, check_theorem_C

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_AUDIT = 0, 1, 2, 3
CSV_VERSION = "ncssa-audit v1"
CSV_HEADER = ["seed", "dims", "lhs", "rhs", "constant", "gap", "pass", "wall_ms"]
PRESETS = ("mub", "ptrace", "cs", "random", "dpi", "improved-dpi", "petz")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("NCSSA_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"NCSSA_SEED must be an integer, got {raw!r}") from None


def _parse_dims(text: str | None, default: tuple[int, ...], n: int | None = None) -> tuple[int, ...]:
    if text is None:
        return default
    try:
        dims = tuple(int(v) for v in text.replace("x", ",").split(",") if v.strip())
    except ValueError:
        raise InputError(f"--dims must be comma-separated integers, got {text!r}") from None
    if n is not None and len(dims) != n:
        raise InputError(f"--dims needs {n} entries, got {len(dims)}")
    if any(d < 1 for d in dims):
        raise InputError("--dims entries must be positive")
    return dims


def _check_cap(dims, cap: int):
    if math.prod(dims) > cap:
        raise InputError(f"product of dims {math.prod(dims)} exceeds the cap {cap}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


# --------------------------------------------------------------------------
# gen


def _state_block(rho, sigma, expectation) -> dict:
    return {"states": {"rho": element_to_json(rho), "sigma": element_to_json(sigma)},
            "expectation": expectation}


def build_instance(preset: str, seed: int, args) -> dict:
    doc = {"schema": "ncssa-instance", "version": SCHEMA_VERSION, "preset": preset, "seed": seed}
    if preset == "mub":
        d = args.d or 2
        _check_cap((d,), args.max_dim_product)
        P, Q = build_mub_instance(d)
        doc["params"] = {"d": d}
        doc["povms"] = {"P": povm_to_json(P), "Q": povm_to_json(Q)}
    elif preset == "ptrace":
        _check_cap((args.dA, args.dB), args.max_dim_product)
        pa, pb = build_partial_trace_instance(args.dA, args.dB)
        doc["params"] = {"dA": args.dA, "dB": args.dB}
        doc["channels"] = {"phi_A": channel_to_json(pa), "phi_B": channel_to_json(pb)}
    elif preset == "cs":
        d = args.d or 2
        size = d ** 3 if args.kind == "petz" else d * d if args.kind == "tensor" else d
        _check_cap((size,), args.max_dim_product)
        a, b, r = build_commuting_square(args.kind, d)
        doc["params"] = {"kind": args.kind, "d": d}
        doc["inclusions"] = {"A": inclusion_to_json(a), "B": inclusion_to_json(b),
                             "R": inclusion_to_json(r)}
    elif preset == "random":
        d_m, d_a, d_b = _parse_dims(args.dims, (3, 2, 2), 3)
        _check_cap((d_m, d_a, d_b), args.max_dim_product)
        rng = rng_from(seed)
        pa = random_channel(d_m, d_a, int(np.ceil(d_m / d_a)) + 1, rng)
        pb = random_channel(d_m, d_b, int(np.ceil(d_m / d_b)) + 1, rng)
        rho, sigma = random_state(d_m, seed=rng), random_state(d_m, seed=rng)
        doc["params"] = {"dims": [d_m, d_a, d_b]}
        doc["channels"] = {"phi_A": channel_to_json(pa), "phi_B": channel_to_json(pb)}
        doc.update(_state_block(rho, sigma, {"kind": "trivial"}))
    elif preset in ("dpi", "improved-dpi", "petz"):
        if preset == "petz":
            d = args.d or 2
            _check_cap((d, d, d), args.max_dim_product)
            inst = build_petz_instance(seed, d)
            doc["params"] = {"d": d}
            expectation = {"kind": "factor", "dims": [d, d], "keep": 0}
        else:
            d_m, d_x = _parse_dims(args.dims, (3, 2), 2)
            _check_cap((d_m, d_x), args.max_dim_product)
            builder = build_dpi_instance if preset == "dpi" else build_improved_dpi_instance
            inst = builder(seed, d_m, d_x)
            doc["params"] = {"dims": [d_m, d_x]}
            expectation = {"kind": "trivial"}
        doc["channels"] = {"phi_A": channel_to_json(inst.phi_a), "phi_B": channel_to_json(inst.phi_b)}
        doc.update(_state_block(inst.rho, inst.sigma, expectation))
    else:
        raise InputError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    return doc


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    text = dumps(build_instance(args.preset, seed, args)) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# constant


def _load(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    return loads_instance(text)


def _checked_pair(doc):
    pa, pb, r = channel_pair(doc)
    for name, ch in (("phi_A", pa), ("phi_B", pb)):
        if not (ch.tp and ch.cp):
            raise SchemaError(f"$.channels.{name}", "not completely positive and trace preserving")
    if pa.input != pb.input:
        raise SchemaError("$.channels", "phi_A and phi_B must share their input algebra")
    return pa, pb, r


def _expectation(doc, phi_b, sigma):
    entry = doc.get("expectation", {"kind": "trivial"})
    omega = phi_b(sigma).herm()
    kind = entry.get("kind") if isinstance(entry, dict) else None
    try:
        if kind == "trivial":
            return trivial_expectation(omega)
        if kind == "factor":
            return factor_expectation(tuple(entry["dims"]), int(entry["keep"]), omega)
    except (KeyError, TypeError) as e:
        raise SchemaError("$.expectation", f"malformed factor expectation ({e})") from None
    except ValueError as e:
        raise SchemaError("$.expectation", str(e)) from None
    raise SchemaError("$.expectation.kind", f"unknown expectation kind {kind!r}")


def _log_inv(c: float, base: float) -> float:
    return float(-np.log(c) / np.log(base)) + 0.0 if c > 0 else float("inf")


def compute_constant(doc: dict, which: str, args) -> tuple[dict, bool]:
    """Result record and convergence flag for one constant of an instance."""
    base = 2.0 if args.log2 else math.e
    out = {"constant": which, "preset": doc.get("preset"), "seed": doc.get("seed"),
           "log_base": "2" if args.log2 else "e"}
    converged = True
    if which == "flo":
        if "povms" not in doc:
            raise SchemaError("$.povms", "the overlap of measurements needs two POVMs")
        P = povm_from_json(doc["povms"].get("P"), "$.povms.P")
        Q = povm_from_json(doc["povms"].get("Q"), "$.povms.Q")
        value, pairs = frank_lieb_overlap(P, Q)
        out.update(value=value, log_inv_value=_log_inv(value, base),
                   pairs=[list(map(int, p)) for p in pairs])
        return out, converged
    pa, pb, r = _checked_pair(doc)
    if which == "cb":
        value = cb_constant(pa, pb)
        out.update(value=value, log_inv_value=_log_inv(value, base))
    elif which == "overlap":
        res = overlap_constant(pa, pb, r, restarts=args.restarts, seed=args.seed_value)
        converged = res.converged
        out.update(value=res.value, log_inv_value=_log_inv(res.value, base),
                   converged=res.converged, restarts_agree=res.restarts_agree,
                   restart_values=res.diagnostics["restart_values"],
                   witness_a=element_to_json(res.a), witness_b=element_to_json(res.b))
    elif which == "bsw":
        res = bsw_constant(pa, pb, restarts=args.restarts, seed=args.seed_value)
        converged = bool(res.diagnostics.get("converged", True))
        out.update(value=res.lower, lower=res.lower, upper=res.upper, cb=res.cb,
                   witness_a=element_to_json(res.a), witness_b=element_to_json(res.b))
    elif which == "kappa":
        states = doc.get("states")
        if not isinstance(states, dict):
            raise SchemaError("$.states", "kappa needs states rho and sigma")
        rho = element_from_json(states.get("rho"), "$.states.rho")
        sigma = element_from_json(states.get("sigma"), "$.states.sigma")
        E = _expectation(doc, pb, sigma)
        if args.quad_panels < 1:
            raise InputError("--quad-panels must be positive")
        res = kappa(rho, sigma, pa, pb, E, T=args.quad_T, panel_width=2 * args.quad_T / args.quad_panels,
                    nodes=args.quad_nodes, tol=args.quad_tol, jobs=args.jobs)
        converged = res.converged
        scale = 1.0 / np.log(base)
        out.update(value=res.kappa * scale, quad_error=res.quadrature_error_estimate * scale,
                   converged=res.converged, T=res.T, levels=[v * scale for v in res.diagnostics["levels"]])
    else:
        raise InputError(f"unknown constant {which!r}")
    return out, converged


def cmd_constant(args) -> int:
    doc = _load(args.instance)
    args.seed_value = args.seed if args.seed is not None else _default_seed()
    out, converged = compute_constant(doc, args.constant, args)
    sys.stdout.write(dumps(out) + "\n")
    return EXIT_OK if converged else EXIT_SOLVER


# --------------------------------------------------------------------------
# audit

_AUDIT_DIMS = {"A": (3, 2, 2, 2), "B": (3, 2, 2), "C": (3, 2)}


def _audit_one(theorem: str, seed: int, dims: tuple, preset: str, quad: dict):
    t0 = time.perf_counter()
    if theorem == "A":
        rho, pa, pb, dc = random_theorem_a_instance(seed, dims)
        rep = check_theorem_A(rho, pa, pb, dc, seed=seed)
    elif theorem == "B":
        rho, pa, pb = random_theorem_b_instance(seed, dims)
        rep = check_theorem_B(rho, pa, pb, seed=seed)
    else:
        if preset == "petz":
            inst = build_petz_instance(seed, dims[0])
        elif preset == "dpi":
            inst = build_dpi_instance(seed, *dims)
        else:
            inst = build_improved_dpi_instance(seed, *dims)
        rep = check_theorem_C(inst.rho, inst.sigma, inst.phi_a, inst.phi_b, inst.expectation,
                              seed=seed, **quad)
    wall = (time.perf_counter() - t0) * 1e3
    return rep, wall


def _audit_task(job):
    return _audit_one(*job)


def cmd_audit(args) -> int:
    theorem = args.theorem
    if args.seeds < 0:
        raise InputError("--seeds must be non-negative")
    if theorem == "C" and args.preset == "petz":
        dims = _parse_dims(args.dims, (2,), 1)
        _check_cap(dims * 3, args.max_dim_product)
    else:
        n = len(_AUDIT_DIMS[theorem])
        dims = _parse_dims(args.dims, _AUDIT_DIMS[theorem], n)
        _check_cap(dims, args.max_dim_product)
    base = args.seed if args.seed is not None else _default_seed()
    seeds = [base + i for i in range(args.seeds)]
    quad = {"T": args.quad_T, "panel_width": 2 * args.quad_T / args.quad_panels,
            "nodes": args.quad_nodes, "tol": args.quad_tol}
    jobs = [(theorem, s, dims, args.preset, quad) for s in seeds]
    t0 = time.perf_counter()
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_audit_task, jobs))
    else:
        results = [_audit_task(j) for j in jobs]
    total = (time.perf_counter() - t0) * 1e3

    scale = 1.0 / np.log(2.0) if args.log2 else 1.0
    dims_s = "x".join(map(str, dims))
    buf = _io.StringIO()
    buf.write(f"# {CSV_VERSION} theorem={theorem} log_base={'2' if args.log2 else 'e'}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    gaps, all_pass = [], True
    for seed, (rep, wall) in zip(seeds, results):
        gaps.append(rep.gap)
        all_pass &= rep.passed
        w.writerow([seed, dims_s, _fmt(rep.lhs * scale), _fmt(rep.rhs * scale),
                    _fmt(rep.constant_used), _fmt(rep.gap * scale), _fmt(rep.passed), f"{wall:.3f}"])
    min_gap = _fmt(min(gaps) * scale) if gaps else ""
    w.writerow(["summary", dims_s, "", "", "", min_gap, _fmt(all_pass), f"{total:.3f}"])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK if all_pass else EXIT_AUDIT


# --------------------------------------------------------------------------
# parser


def _add_quad(p):
    g = p.add_argument_group("quadrature for kappa")
    g.add_argument("--quad-T", type=float, default=8.0, help="truncation [-T, T] (default 8)")
    g.add_argument("--quad-panels", type=int, default=32,
                   help="number of Gauss-Legendre panels on [-T, T] (default 32)")
    g.add_argument("--quad-nodes", type=int, default=16, help="nodes per panel (default 16)")
    g.add_argument("--quad-tol", type=float, default=1e-8,
                   help="stop refining when halving the panels changes kappa by less (default 1e-8)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ncssa", description="Uncertainty constants and entropy inequality audits "
                "for channels between finite-dimensional matrix algebras.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("--preset", required=True, help=f"one of: {', '.join(PRESETS)}")
    g.add_argument("--seed", type=int, help="random seed (default: $NCSSA_SEED or 0)")
    g.add_argument("--d", type=int, help="dimension for mub (prime), cs and petz")
    g.add_argument("--dA", type=int, default=2, help="first factor for ptrace (default 2)")
    g.add_argument("--dB", type=int, default=2, help="second factor for ptrace (default 2)")
    g.add_argument("--kind", choices=("tensor", "mub", "petz"), default="tensor",
                   help="commuting square for the cs preset (default tensor)")
    g.add_argument("--dims", help="dM,dA,dB for random; dM,dX for dpi and improved-dpi")
    g.add_argument("--max-dim-product", type=int, default=64, help="desk-scale cap (default 64)")
    g.add_argument("--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("constant", help="compute an uncertainty constant of an instance")
    c.add_argument("instance", help="instance JSON file")
    c.add_argument("--constant", required=True, choices=("cb", "overlap", "bsw", "kappa", "flo"))
    c.add_argument("--restarts", type=int, default=16, help="restarts for overlap and bsw")
    c.add_argument("--seed", type=int, help="solver seed (default: $NCSSA_SEED or 0)")
    c.add_argument("--jobs", type=int, default=1, help="processes for kappa quadrature nodes")
    c.add_argument("--log2", action="store_true", help="report logarithms in base 2")
    _add_quad(c)
    c.set_defaults(func=cmd_constant)

    a = sub.add_parser("audit", help="audit an inequality on random instances, CSV output")
    a.add_argument("--theorem", required=True, choices=("A", "B", "C"))
    a.add_argument("--seeds", type=int, required=True, help="number of seeds")
    a.add_argument("--seed", type=int, help="first seed (default: $NCSSA_SEED or 0)")
    a.add_argument("--dims", help="A: dM,dA,dB,dC (3,2,2,2); B: dM,dA,dB (3,2,2); "
                   "C: dM,dX (3,2), or d for --preset petz (2)")
    a.add_argument("--preset", choices=("improved-dpi", "dpi", "petz"), default="improved-dpi",
                   help="instance family for theorem C (default improved-dpi)")
    a.add_argument("--max-dim-product", type=int, default=64, help="desk-scale cap (default 64)")
    a.add_argument("--jobs", type=int, default=1, help="parallel processes over seeds")
    a.add_argument("--log2", action="store_true", help="report entropies in bits")
    a.add_argument("--out", help="CSV output file (default stdout)")
    _add_quad(a)
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SchemaError, ValueError) as e:
        print(f"ncssa: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
