"""Instance files: JSON schema version 1.

Complex matrices are lists of rows of ``[re, im]`` pairs, algebras are
``{"blocks": [{"dim": 2, "weight": 1.0}, ...]}`` and floats are written with
17 significant digits so that a round trip is exact.

Channel records carry a ``kind``:

* ``{"kind": "coord", "input": alg, "output": alg, "coord": matrix}``
* ``{"kind": "kraus", "in_dim": n, "out_dim": m, "kraus": [matrix, ...]}``
* ``{"kind": "povm", "effects": [matrix, ...], "as_matrix": false}``
* ``{"kind": "cond_exp", "inclusion": inclusion}``

Inclusions are ``{"sub": alg, "ambient": alg, "embed": matrix}`` and states
are ``{"algebra": alg, "blocks": [matrix, ...]}``.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .algebra import AlgElement, Algebra, make_algebra
from .channels import Channel, Povm, channel_from_kraus, povm_channel
from .inclusions import Inclusion, nested_inclusion

__all__ = [
    "SCHEMA_VERSION",
    "SchemaError",
    "dumps",
    "matrix_to_json",
    "matrix_from_json",
    "algebra_to_json",
    "algebra_from_json",
    "element_to_json",
    "element_from_json",
    "channel_to_json",
    "channel_from_json",
    "povm_to_json",
    "povm_from_json",
    "inclusion_to_json",
    "inclusion_from_json",
    "loads_instance",
    "channel_pair",
]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Malformed instance document; the message starts with the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _is_scalar_list(v) -> bool:
    return isinstance(v, list) and all(
        isinstance(e, (int, float, bool, str, type(None))) or
        (isinstance(e, list) and all(isinstance(f, (int, float)) for f in e)) for e in v)


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with 17-digit floats; numeric rows stay on one line."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        obj = list(obj)
        if _is_scalar_list(obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# --------------------------------------------------------------------------
# primitives


def matrix_to_json(m) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(v, path: str = "matrix") -> np.ndarray:
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(path, "expected a rectangular list of [re, im] pairs") from None
    if a.ndim != 3 or a.shape[2] != 2:
        raise SchemaError(path, f"expected shape (rows, cols, 2), got {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def _get(d, key: str, path: str):
    if not isinstance(d, dict):
        raise SchemaError(path, "expected an object")
    if key not in d:
        raise SchemaError(f"{path}.{key}", "missing field")
    return d[key]


def algebra_to_json(alg: Algebra) -> dict:
    return alg.to_dict()


def algebra_from_json(v, path: str = "algebra") -> Algebra:
    blocks = _get(v, "blocks", path)
    if not isinstance(blocks, list) or not blocks:
        raise SchemaError(f"{path}.blocks", "expected a non-empty list")
    out = []
    for i, b in enumerate(blocks):
        p = f"{path}.blocks[{i}]"
        dim, weight = _get(b, "dim", p), _get(b, "weight", p)
        if not isinstance(dim, int) or dim < 1:
            raise SchemaError(f"{p}.dim", "expected a positive integer")
        if not isinstance(weight, (int, float)) or not weight > 0:
            raise SchemaError(f"{p}.weight", "expected a positive number")
        out.append((dim, float(weight)))
    return make_algebra(out)


def element_to_json(x: AlgElement) -> dict:
    return {"algebra": algebra_to_json(x.algebra),
            "blocks": [matrix_to_json(b) for b in x.blocks]}


def element_from_json(v, path: str = "state") -> AlgElement:
    alg = algebra_from_json(_get(v, "algebra", path), f"{path}.algebra")
    blocks = _get(v, "blocks", path)
    if not isinstance(blocks, list) or len(blocks) != alg.n_blocks:
        raise SchemaError(f"{path}.blocks", f"expected {alg.n_blocks} blocks")
    mats = [matrix_from_json(b, f"{path}.blocks[{i}]") for i, b in enumerate(blocks)]
    try:
        return alg.element(mats)
    except ValueError as e:
        raise SchemaError(f"{path}.blocks", str(e)) from None


def povm_to_json(P: Povm) -> dict:
    return {"hilbert_dim": P.hilbert_dim, "effects": [matrix_to_json(E) for E in P.effects]}


def povm_from_json(v, path: str = "povm") -> Povm:
    effects = _get(v, "effects", path)
    if not isinstance(effects, list) or not effects:
        raise SchemaError(f"{path}.effects", "expected a non-empty list")
    mats = [matrix_from_json(E, f"{path}.effects[{i}]") for i, E in enumerate(effects)]
    try:
        return Povm(mats[0].shape[0], tuple(mats))
    except ValueError as e:
        raise SchemaError(f"{path}.effects", str(e)) from None


def inclusion_to_json(inc: Inclusion) -> dict:
    return {"sub": algebra_to_json(inc.sub), "ambient": algebra_to_json(inc.ambient),
            "embed": matrix_to_json(inc.embed.coord)}


def inclusion_from_json(v, path: str = "inclusion") -> Inclusion:
    sub = algebra_from_json(_get(v, "sub", path), f"{path}.sub")
    amb = algebra_from_json(_get(v, "ambient", path), f"{path}.ambient")
    coord = matrix_from_json(_get(v, "embed", path), f"{path}.embed")
    try:
        return Inclusion(sub, amb, Channel(sub, amb, coord))
    except ValueError as e:
        raise SchemaError(path, str(e)) from None


def channel_to_json(ch: Channel) -> dict:
    return {"kind": "coord", "input": algebra_to_json(ch.input),
            "output": algebra_to_json(ch.output), "coord": matrix_to_json(ch.coord)}


def channel_from_json(v, path: str = "channel") -> Channel:
    kind = _get(v, "kind", path)
    try:
        if kind == "coord":
            inp = algebra_from_json(_get(v, "input", path), f"{path}.input")
            out = algebra_from_json(_get(v, "output", path), f"{path}.output")
            return Channel(inp, out, matrix_from_json(_get(v, "coord", path), f"{path}.coord"))
        if kind == "kraus":
            ks = _get(v, "kraus", path)
            if not isinstance(ks, list) or not ks:
                raise SchemaError(f"{path}.kraus", "expected a non-empty list")
            mats = [matrix_from_json(K, f"{path}.kraus[{i}]") for i, K in enumerate(ks)]
            return channel_from_kraus(mats, int(_get(v, "in_dim", path)),
                                      int(_get(v, "out_dim", path)))
        if kind == "povm":
            return povm_channel(povm_from_json(v, path), as_matrix=bool(v.get("as_matrix", False)))
        if kind == "cond_exp":
            return inclusion_from_json(_get(v, "inclusion", path), f"{path}.inclusion").cond_exp
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError(path, str(e)) from None
    raise SchemaError(f"{path}.kind", f"unknown channel kind {kind!r}")


# --------------------------------------------------------------------------
# documents


def loads_instance(text: str) -> dict:
    """Parse an instance document and check its header.

    JSON syntax errors are reported as ``line L column C``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"line {e.lineno} column {e.colno}", e.msg) from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected a JSON object")
    if doc.get("schema") != "ncssa-instance":
        raise SchemaError("$.schema", "expected 'ncssa-instance'")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaError("$.version", f"unsupported version {doc.get('version')!r}")
    return doc


def channel_pair(doc: dict):
    """``(Phi_A, Phi_B, R_inc or None)`` from ``channels``, ``inclusions`` or ``povms``.

    With ``inclusions`` holding ``A``, ``B`` and ``R`` inside a common ``M``,
    the channels are the conditional expectations and ``R`` is nested in ``A``.
    """
    if "channels" in doc:
        ch = doc["channels"]
        a = channel_from_json(_get(ch, "phi_A", "$.channels"), "$.channels.phi_A")
        b = channel_from_json(_get(ch, "phi_B", "$.channels"), "$.channels.phi_B")
        r = None
        if "R" in ch:
            r = inclusion_from_json(ch["R"], "$.channels.R")
        return a, b, r
    if "inclusions" in doc:
        inc = doc["inclusions"]
        a, b, r = (inclusion_from_json(_get(inc, k, "$.inclusions"), f"$.inclusions.{k}")
                   for k in ("A", "B", "R"))
        try:
            return a.cond_exp, b.cond_exp, nested_inclusion(r, a)
        except ValueError as e:
            raise SchemaError("$.inclusions.R", str(e)) from None
    if "povms" in doc:
        P = povm_from_json(_get(doc["povms"], "P", "$.povms"), "$.povms.P")
        Q = povm_from_json(_get(doc["povms"], "Q", "$.povms"), "$.povms.Q")
        return povm_channel(P), povm_channel(Q), None
    raise SchemaError("$", "instance has no channels, inclusions or povms")
