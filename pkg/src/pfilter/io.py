"""Reading and writing problems and results as JSON, plus a flat CSV importer.

Problem documents look like::

    {"n": 3, "p": [0.01, 0.2, 0.03], "ic": "weak",
     "layers": [{"groups": [[0], [1], [2]], "alpha": 0.1, "lambda": 1.0,
                 "adaptive": false, "w": [1, 1, 1], "u": [1, 1, 1],
                 "reshape": "identity", "combiner": "simes",
                 "dependence": "prds"}]}

Floats are written with Python's shortest round-trip representation, so
``parse(serialize(x))`` reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from typing import Any, Optional

import numpy as np

from . import combine as cb
from .model import Layer, Problem, RejectionResult, finest_layer
from .reshape import dump_reshape, parse_reshape

log = logging.getLogger("pfilter")

_SIMPLE_COMBINERS = {
    "simes": cb.Simes, "wsimes": cb.WeightedSimes, "rwsimes": cb.ReshapedWeightedSimes,
    "fisher": cb.Fisher, "stouffer": cb.Stouffer, "bonferroni": cb.Bonferroni,
    "ruschendorf": cb.Ruschendorf,
}
_COMBINER_NAMES = {v: k for k, v in _SIMPLE_COMBINERS.items()}


class InputError(ValueError):
    """Malformed input; ``where`` names the offending line or field."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


def _field(obj: dict, key: str, where: str, default: Any = ...):
    if key in obj:
        return obj[key]
    if default is ...:
        raise InputError(where, f"missing required field {key!r}")
    return default


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(where, f"expected a number, got {x!r}")
    return float(x)


def _numbers(xs, where: str) -> tuple[float, ...]:
    if not isinstance(xs, list):
        raise InputError(where, f"expected an array of numbers, got {type(xs).__name__}")
    return tuple(_number(x, f"{where}[{i}]") for i, x in enumerate(xs))


def parse_combiner(obj, where: str = "combiner"):
    if obj is None:
        return cb.Simes()
    if isinstance(obj, str):
        if obj not in _SIMPLE_COMBINERS:
            raise InputError(where, f"unknown combiner {obj!r}")
        return _SIMPLE_COMBINERS[obj]()
    if isinstance(obj, dict) and len(obj) == 1:
        (key, val), = obj.items()
        if key == "ruger":
            if isinstance(val, bool) or not isinstance(val, int) or val < 1:
                raise InputError(f"{where}.ruger", "expected a positive integer")
            return cb.Ruger(val)
        if key == "external":
            return cb.External(_numbers(val, f"{where}.external"))
        if key in ("wsimes", "rwsimes") and isinstance(val, dict):
            allowed = {"within_weights"} if key == "wsimes" else {"within_weights", "within_reshape"}
            extra = sorted(set(val) - allowed)
            if extra:
                raise InputError(f"{where}.{key}", f"unknown field {extra[0]!r}; expected {sorted(allowed)}")
            ww = val.get("within_weights")
            if ww is not None:
                if not isinstance(ww, list):
                    raise InputError(f"{where}.{key}.within_weights", "expected an array of arrays")
                ww = tuple(_numbers(v, f"{where}.{key}.within_weights[{g}]") for g, v in enumerate(ww))
            if key == "wsimes":
                return cb.WeightedSimes(ww)
            reshape = val.get("within_reshape")
            try:
                reshape = None if reshape is None else parse_reshape(reshape)
            except (ValueError, TypeError) as exc:
                raise InputError(f"{where}.{key}.within_reshape", str(exc)) from None
            return cb.ReshapedWeightedSimes(ww, reshape)
    raise InputError(where, f"unrecognised combiner specification {obj!r}")


def dump_combiner(spec):
    if isinstance(spec, cb.Ruger):
        return {"ruger": spec.k}
    if isinstance(spec, cb.External):
        return {"external": list(spec.values)}
    name = _COMBINER_NAMES[type(spec)]
    if isinstance(spec, cb.WeightedSimes) and spec.within_weights is not None:
        return {"wsimes": {"within_weights": [list(w) for w in spec.within_weights]}}
    if isinstance(spec, cb.ReshapedWeightedSimes) and (spec.within_weights is not None
                                                      or spec.within_reshape is not None):
        body = {}
        if spec.within_weights is not None:
            body["within_weights"] = [list(w) for w in spec.within_weights]
        if spec.within_reshape is not None:
            body["within_reshape"] = dump_reshape(spec.within_reshape)
        return {"rwsimes": body}
    return name


def parse_layer(obj, index: int = 0) -> Layer:
    where = f"layers[{index}]"
    if not isinstance(obj, dict):
        raise InputError(where, "expected an object")
    groups = _field(obj, "groups", where)
    if not isinstance(groups, list):
        raise InputError(f"{where}.groups", "expected an array of index arrays")
    parsed = []
    for g, members in enumerate(groups):
        if not isinstance(members, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in members):
            raise InputError(f"{where}.groups[{g}]", "expected an array of integer indices")
        parsed.append(tuple(members))
    alpha = _number(_field(obj, "alpha", where), f"{where}.alpha")
    adaptive = _field(obj, "adaptive", where, False)
    if not isinstance(adaptive, bool):
        raise InputError(f"{where}.adaptive", "expected true or false")
    lam = obj.get("lambda")
    lam = None if lam is None else _number(lam, f"{where}.lambda")
    w = obj.get("w")
    u = obj.get("u")
    if w is None or u is None:
        missing = " and ".join(k for k, v in (("w", w), ("u", u)) if v is None)
        log.info("%s: no %s given; using unit weights", where, missing)
    w = None if w is None else _numbers(w, f"{where}.w")
    u = None if u is None else _numbers(u, f"{where}.u")
    try:
        reshape = parse_reshape(obj.get("reshape"), len(parsed))
    except (ValueError, TypeError) as exc:
        raise InputError(f"{where}.reshape", str(exc)) from None
    combiner = parse_combiner(obj.get("combiner"), f"{where}.combiner")
    dependence = _field(obj, "dependence", where, "prds")
    if not isinstance(dependence, str):
        raise InputError(f"{where}.dependence", "expected a string label")
    return Layer(groups=tuple(parsed), alpha=alpha, w=w, u=u, lam=lam, adaptive=adaptive,
                 reshape=reshape, combiner=combiner, dependence=dependence)


def problem_from_dict(obj, require_p: bool = True) -> Problem:
    if not isinstance(obj, dict):
        raise InputError("document", "expected a JSON object at the top level")
    p = obj.get("p")
    if p is None:
        if require_p:
            raise InputError("document", "missing required field 'p'")
        n = obj.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise InputError("n", "expected a positive integer when 'p' is omitted")
        p = [0.5] * n
    p = _numbers(p, "p")
    n = obj.get("n", len(p))
    if isinstance(n, bool) or not isinstance(n, int) or n != len(p):
        raise InputError("n", f"n = {n!r} does not match the {len(p)} p-values given")
    layers = _field(obj, "layers", "document")
    if not isinstance(layers, list):
        raise InputError("layers", "expected an array of layer objects")
    ic = obj.get("ic", "weak")
    if ic not in ("weak", "strong"):
        raise InputError("ic", f"expected 'weak' or 'strong', got {ic!r}")
    return Problem(pvalues=p, layers=tuple(parse_layer(l, m) for m, l in enumerate(layers)), ic=ic)


def loads_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None


def parse_problem(text: str) -> Problem:
    """Parse a JSON problem document."""
    return problem_from_dict(loads_json(text))


def layer_to_dict(layer: Layer) -> dict:
    return {
        "groups": [list(g) for g in layer.groups],
        "alpha": layer.alpha,
        "lambda": layer.lam,
        "adaptive": layer.adaptive,
        "w": list(layer.w),
        "u": list(layer.u),
        "reshape": dump_reshape(layer.reshape, layer.n_groups),
        "combiner": dump_combiner(layer.combiner),
        "dependence": layer.dependence,
    }


def problem_to_dict(problem: Problem) -> dict:
    return {
        "n": problem.n,
        "p": list(problem.pvalues),
        "ic": problem.ic,
        "layers": [layer_to_dict(l) for l in problem.layers],
    }


def serialize_problem(problem: Problem) -> str:
    """Canonical JSON: fixed field order, shortest round-trip floats."""
    return json.dumps(problem_to_dict(problem), indent=2) + "\n"


def result_to_dict(result: RejectionResult) -> dict:
    return {
        "k_hat": [float(k) for k in result.k_hat],
        "rejected": list(result.elementary),
        "per_layer": [list(r) for r in result.per_layer],
        "pi_hat": [float(x) for x in result.pi_hat],
        "group_pvalues": [[float(x) for x in gp] for gp in result.group_pvalues],
        "cycles": int(result.cycles),
    }


def serialize_result(result: RejectionResult) -> str:
    return json.dumps(result_to_dict(result), indent=2) + "\n"


def read_pvalue_csv(text: str) -> np.ndarray:
    """One p-value per line (first column), with an optional header line."""
    values = []
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    for lineno, row in enumerate(rows, start=1):
        cell = row[0].strip()
        try:
            values.append(float(cell))
        except ValueError:
            if lineno == 1 and not values:
                continue  # header
            raise InputError(f"line {lineno}", f"not a number: {cell!r}") from None
    if not values:
        raise InputError("line 1", "no p-values found")
    return np.array(values)


def problem_from_csv(text: str, alpha: float, adaptive: bool = False, reshape: Optional[str] = None) -> Problem:
    """Single finest layer over the p-values of a flat CSV file."""
    p = read_pvalue_csv(text)
    spec = parse_reshape(reshape, p.size)
    return Problem(pvalues=p, layers=(finest_layer(p.size, alpha, adaptive=adaptive, reshape=spec),))

