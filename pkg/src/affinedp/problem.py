"""JSON problem files and JSON-safe report encoding.

Four kinds of problem file are understood::

    {"kind": "affine", "n": 1, "controls": [["a", "b"]],
     "A": [[[0.5], [0.8]]], "b": [[1.0, 0.3]], "jbar": [0.0]}

    {"kind": "exponential", "n": 1, "controls": [["u"]],
     "p": [[[0.5, 0.5]]], "g": [[[-0.5, 0.0]]]}          # last column: termination

    {"kind": "multiplicative", ...same with "h" instead of "g"...}

    {"kind": "shortest-path", "n": 2, "arcs": [[0, 1, -1.0], [0, "t", 5.0], ...]}

States are 0-based.  Optional ``name`` and ``description`` strings are kept.
Non-finite numbers are rejected on input; reports spell infinity as ``"inf"``.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import ModelSpec
from .errors import AffineDPError, ModelError
from .expssp import TerminatingChainSpec, build_chain_model, deterministic_sp_chain

KINDS = ("affine", "multiplicative", "exponential", "shortest-path")
_REQUIRED = {
    "affine": ("n", "controls", "A", "b", "jbar"),
    "multiplicative": ("n", "controls", "p", "h"),
    "exponential": ("n", "controls", "p", "g"),
    "shortest-path": ("n", "arcs"),
}


class ProblemError(AffineDPError):
    pass


class ParseError(ProblemError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line, self.column = line, column


class ValidationError(ProblemError):
    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


@dataclass(frozen=True)
class ProblemFile:
    kind: str
    payload: dict = field(repr=False)
    name: str | None = None
    description: str | None = None
    model: ModelSpec = field(init=False, repr=False, compare=False)
    chain: TerminatingChainSpec | None = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError("UnknownKind", f"kind must be one of {KINDS}")
        missing = [k for k in _REQUIRED[self.kind] if k not in self.payload]
        if missing:
            raise ValidationError("MissingField", f"{self.kind} problem lacks {missing}")
        try:
            chain, model = _build(self.kind, self.payload)
        except ModelError as exc:
            raise ValidationError(type(exc).__name__, str(exc)) from exc
        except (ValueError, TypeError) as exc:
            raise ValidationError("MalformedPayload", str(exc)) from exc
        object.__setattr__(self, "chain", chain)
        object.__setattr__(self, "model", model)

    @property
    def n(self) -> int:
        return self.model.n

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.name is not None:
            doc["name"] = self.name
        if self.description is not None:
            doc["description"] = self.description
        doc.update(self.payload)
        return doc


def _check_numbers(x: Any, where: str) -> None:
    if isinstance(x, bool) or isinstance(x, str):
        raise ValidationError("NonNumericEntry", f"{where}: expected a number, got {x!r}")
    if isinstance(x, (list, tuple)):
        for k, y in enumerate(x):
            _check_numbers(y, f"{where}[{k}]")
    elif not isinstance(x, (int, float)):
        raise ValidationError("NonNumericEntry", f"{where}: expected a number, got {x!r}")


def _build(kind: str, d: dict) -> tuple[TerminatingChainSpec | None, ModelSpec]:
    n = d["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError("DimensionMismatch", "n must be an integer")
    if kind == "shortest-path":
        arcs = []
        for k, arc in enumerate(d["arcs"]):
            if not isinstance(arc, list) or len(arc) != 3:
                raise ValidationError("MalformedArc", f"arcs[{k}] must be [from, to, length]")
            tail, head, length = arc
            _check_numbers([tail, length], f"arcs[{k}]")
            if head != "t":
                _check_numbers(head, f"arcs[{k}][1]")
            arcs.append((int(tail), head if head == "t" else int(head), float(length)))
        chain = deterministic_sp_chain(n, arcs)
        return chain, build_chain_model(chain)
    if kind == "affine":
        for key in ("A", "b", "jbar"):
            _check_numbers(d[key], key)
        return None, ModelSpec(n, d["controls"], d["A"], d["b"], d["jbar"])
    factor_key = "g" if kind == "exponential" else "h"
    _check_numbers(d["p"], "p")
    _check_numbers(d[factor_key], factor_key)
    chain = TerminatingChainSpec(n, d["controls"], d["p"], **{factor_key: d[factor_key]})
    return chain, build_chain_model(chain)


def _reject_constant(name: str):
    raise ParseError(f"non-finite literal {name} is not allowed in problem files")


def loads_problem(text: str) -> ProblemFile:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("top level of a problem file must be an object")
    doc = dict(doc)
    kind = doc.pop("kind", None)
    name = doc.pop("name", None)
    description = doc.pop("description", None)
    if kind is None:
        raise ValidationError("MissingField", "problem file lacks 'kind'")
    return ProblemFile(kind, doc, name, description)


def parse_problem(path: str | Path) -> ProblemFile:
    return loads_problem(Path(path).read_text(encoding="utf-8"))


def dumps_problem(problem: ProblemFile) -> str:
    return json.dumps(problem.to_dict(), indent=1)


def write_problem(problem: ProblemFile, path: str | Path) -> None:
    Path(path).write_text(dumps_problem(problem) + "\n", encoding="utf-8")


def affine_problem(model: ModelSpec, name: str | None = None, description: str | None = None) -> ProblemFile:
    payload = {
        "n": model.n,
        "controls": [list(c) for c in model.controls],
        "A": [a.tolist() for a in model.A],
        "b": [b.tolist() for b in model.b],
        "jbar": model.jbar.tolist(),
    }
    return ProblemFile("affine", payload, name, description)


def chain_problem(chain: TerminatingChainSpec, name: str | None = None,
                  description: str | None = None) -> ProblemFile:
    key = "g" if chain.kind == "exponential" else "h"
    payload = {
        "n": chain.n,
        "controls": [list(c) for c in chain.controls],
        "p": [p.tolist() for p in chain.p],
        key: [f.tolist() for f in getattr(chain, key)],
    }
    return ProblemFile(chain.kind, payload, name, description)


def jsonable(obj: Any) -> Any:
    """Convert results to JSON-safe values; infinities become ``"inf"``."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return obj
