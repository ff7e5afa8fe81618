"""Instance (de)serialization.

Wire format, one JSON object per instance:

    {"F": [polynomial, ...],          # map components
     "omega": {"ineqs": [polynomial, ...],   # each g(x) <= 0
               "eqs":   [polynomial, ...],   # each h(x) = 0
               "convex": bool,
               "box": {"lo": [...], "hi": [...]}},   # optional
     "rho": 1.0}                      # optional, defaults to 1.0

    polynomial = {"n_vars": k, "terms": [{"c": 2.5, "e": [1, 0]}, ...]}

Parsing is strict: unknown keys, wrong types, and structural mistakes
raise InstanceParseError (malformed JSON additionally carries
line/column).  Serialization emits normalized terms, so a parse ->
serialize -> parse round trip is exact.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import GapboundError, InstanceParseError
from .feasible import FeasibleSet
from .gap import ViInstance
from .poly import Polynomial, PolynomialMap

__all__ = [
    "polynomial_from_json",
    "polynomial_to_json",
    "feasible_set_from_json",
    "feasible_set_to_json",
    "instance_from_json",
    "instance_to_json",
    "instance_from_string",
    "instance_to_string",
    "load_instance",
    "dump_instance",
    "write_atomic",
]


def _fail(where: str, msg: str) -> None:
    raise InstanceParseError(f"{where}: {msg}")


def _require_keys(obj: dict, where: str, required: set[str], optional: set[str]) -> None:
    unknown = set(obj) - required - optional
    if unknown:
        _fail(where, f"unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        _fail(where, f"missing keys {sorted(missing)}")


def _real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(where, f"expected a real number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(where, f"expected an integer, got {value!r}")
    return value


def polynomial_from_json(obj, where: str = "polynomial") -> Polynomial:
    if not isinstance(obj, dict):
        _fail(where, f"expected an object, got {type(obj).__name__}")
    _require_keys(obj, where, {"n_vars", "terms"}, set())
    n_vars = _integer(obj["n_vars"], f"{where}.n_vars")
    raw = obj["terms"]
    if not isinstance(raw, list):
        _fail(f"{where}.terms", "expected a list")
    terms = []
    for i, t in enumerate(raw):
        tw = f"{where}.terms[{i}]"
        if not isinstance(t, dict):
            _fail(tw, f"expected an object, got {type(t).__name__}")
        _require_keys(t, tw, {"c", "e"}, set())
        c = _real(t["c"], f"{tw}.c")
        e = t["e"]
        if not isinstance(e, list):
            _fail(f"{tw}.e", "expected a list of integers")
        exps = tuple(_integer(v, f"{tw}.e[{j}]") for j, v in enumerate(e))
        terms.append((c, exps))
    try:
        return Polynomial(n_vars, tuple(terms))
    except (ValueError, GapboundError) as exc:
        raise InstanceParseError(f"{where}: {exc}") from exc


def polynomial_to_json(p: Polynomial) -> dict:
    return {
        "n_vars": p.n_vars,
        "terms": [{"c": c, "e": list(e)} for c, e in p.terms],
    }


def feasible_set_from_json(obj, n: int, where: str = "omega") -> FeasibleSet:
    if not isinstance(obj, dict):
        _fail(where, f"expected an object, got {type(obj).__name__}")
    _require_keys(obj, where, set(), {"ineqs", "eqs", "convex", "box"})

    def polys(key: str) -> tuple[Polynomial, ...]:
        raw = obj.get(key, [])
        if not isinstance(raw, list):
            _fail(f"{where}.{key}", "expected a list")
        return tuple(polynomial_from_json(p, f"{where}.{key}[{i}]")
                     for i, p in enumerate(raw))

    convex = obj.get("convex", False)
    if not isinstance(convex, bool):
        _fail(f"{where}.convex", f"expected a boolean, got {convex!r}")
    box = None
    if "box" in obj:
        braw = obj["box"]
        if not isinstance(braw, dict):
            _fail(f"{where}.box", "expected an object with lo/hi")
        _require_keys(braw, f"{where}.box", {"lo", "hi"}, set())
        lo = [_real(v, f"{where}.box.lo[{i}]") for i, v in enumerate(braw["lo"])]
        hi = [_real(v, f"{where}.box.hi[{i}]") for i, v in enumerate(braw["hi"])]
        box = (np.array(lo), np.array(hi))
    try:
        return FeasibleSet(n, ineqs=polys("ineqs"), eqs=polys("eqs"),
                           declared_convex=convex, bounding_box=box)
    except (ValueError, GapboundError) as exc:
        raise InstanceParseError(f"{where}: {exc}") from exc


def feasible_set_to_json(omega: FeasibleSet) -> dict:
    out: dict = {
        "ineqs": [polynomial_to_json(g) for g in omega.ineqs],
        "eqs": [polynomial_to_json(h) for h in omega.eqs],
        "convex": omega.declared_convex,
    }
    if omega.bounding_box is not None:
        lo, hi = omega.bounding_box
        out["box"] = {"lo": list(map(float, lo)), "hi": list(map(float, hi))}
    return out


def instance_from_json(obj) -> ViInstance:
    if not isinstance(obj, dict):
        _fail("instance", f"expected a top-level object, got {type(obj).__name__}")
    _require_keys(obj, "instance", {"F", "omega"}, {"rho"})
    raw_f = obj["F"]
    if not isinstance(raw_f, list) or not raw_f:
        _fail("instance.F", "expected a nonempty list of polynomials")
    comps = tuple(polynomial_from_json(p, f"instance.F[{i}]")
                  for i, p in enumerate(raw_f))
    try:
        F = PolynomialMap(comps)
    except (ValueError, GapboundError) as exc:
        raise InstanceParseError(f"instance.F: {exc}") from exc
    omega = feasible_set_from_json(obj["omega"], F.n_in)
    rho = _real(obj.get("rho", 1.0), "instance.rho")
    try:
        return ViInstance(F, omega, rho)
    except (ValueError, GapboundError) as exc:
        raise InstanceParseError(f"instance: {exc}") from exc


def instance_to_json(inst: ViInstance) -> dict:
    return {
        "F": [polynomial_to_json(p) for p in inst.F.components],
        "omega": feasible_set_to_json(inst.omega),
        "rho": inst.rho,
    }


def instance_from_string(text: str) -> ViInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return instance_from_json(obj)


def instance_to_string(inst: ViInstance) -> str:
    return json.dumps(instance_to_json(inst), indent=2)


def load_instance(path: str) -> ViInstance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InstanceParseError(f"cannot read {path}: {exc.strerror}") from exc
    return instance_from_string(text)


def write_atomic(path: str, text: str) -> None:
    """Write via a sibling temp file plus rename, so readers never see
    a half-written file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-gapbound-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_instance(inst: ViInstance, path: str) -> None:
    write_atomic(path, instance_to_string(inst) + "\n")
