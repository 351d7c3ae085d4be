"""JSON plan documents.

Real numbers are stored as decimal strings with 17 significant digits, which
round-trips every IEEE double exactly; infinities are ``"-inf"`` and ``"inf"``.
"""

from __future__ import annotations

import json
import math
from importlib import metadata
from typing import Any, Optional

import jsonschema

from .models import BoundaryKind, ModelSpec
from .plans import TestPlan, TestShape, _check_invariants, reduce_shape

__all__ = [
    "FORMAT_VERSION",
    "PLAN_SCHEMA",
    "PlanFormatError",
    "format_real",
    "parse_real",
    "plan_to_document",
    "plan_from_document",
    "dumps_plan",
    "loads_plan",
    "save_plan",
    "load_plan",
]

FORMAT_VERSION = "1"

_REAL = {"type": "string", "pattern": r"^(-?inf|nan|[-+]?[0-9.]+([eE][-+]?[0-9]+)?)$"}
_REALS = {"type": "array", "items": _REAL}

PLAN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "PlanDocument",
    "type": "object",
    "required": ["format_version", "model", "shape", "kind", "hypotheses", "stages", "risks", "zeta", "provenance"],
    "additionalProperties": False,
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "model": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"type": "string"},
                "population": {"type": "integer", "minimum": 1},
                "sigma": {"type": "number"},
                "mu": {"type": "number"},
                "mu_y": {"type": "number"},
                "shape": {"type": "number"},
                "means_known": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "shape": {
            "type": "object",
            "required": ["kind", "values", "risks"],
            "properties": {
                "kind": {"type": "string"},
                "values": _REALS,
                "risks": _REALS,
                "extra": {"type": "array", "items": _REALS},
            },
            "additionalProperties": False,
        },
        "kind": {"enum": [k.value for k in BoundaryKind]},
        "hypotheses": {
            "type": "object",
            "required": ["cuts", "indiff_lo", "indiff_hi", "risks"],
            "properties": {"cuts": _REALS, "indiff_lo": _REALS, "indiff_hi": _REALS, "risks": _REALS},
            "additionalProperties": False,
        },
        "stages": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["size", "lower", "upper"],
                "properties": {
                    "size": _REAL,
                    "size_y": {"type": "integer", "minimum": 1},
                    "lower": _REALS,
                    "upper": _REALS,
                },
                "additionalProperties": False,
            },
        },
        "risks": {"type": "array", "items": {"type": "array", "items": _REAL, "minItems": 2, "maxItems": 2}},
        "zeta": {"anyOf": [_REAL, {"type": "null"}]},
        "nbar": {"anyOf": [_REAL, {"type": "null"}]},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "provenance": {
            "type": "object",
            "required": ["tool_version"],
            "properties": {
                "tool_version": {"type": "string"},
                "certificate_digest": {"type": ["string", "null"]},
            },
            "additionalProperties": False,
        },
    },
}


class PlanFormatError(ValueError):
    """A plan document failed schema or consistency validation."""


def format_real(x: float) -> str:
    """17-significant-digit decimal string; ``"inf"``/``"-inf"`` for infinities."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def parse_real(s: str) -> float:
    return float(s)


def _tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _reals(vals) -> list:
    return [format_real(v) for v in vals]


def _size(plan: TestPlan, n) -> str:
    return format_real(n) if plan.model.continuous_time else str(int(n))


def plan_to_document(plan: TestPlan, certificate_digest: Optional[str] = None) -> dict:
    """Serialize ``plan`` as a plain dictionary."""
    shape = plan.shape.to_dict()
    shape["values"] = _reals(shape["values"])
    shape["risks"] = _reals(shape["risks"])
    if "extra" in shape:
        shape["extra"] = [_reals(e) for e in shape["extra"]]
    stages = []
    for ell, n in enumerate(plan.sizes):
        row = {"size": _size(plan, n), "lower": _reals(plan.lower[ell]), "upper": _reals(plan.upper[ell])}
        if plan.sizes_y is not None:
            row["size_y"] = int(plan.sizes_y[ell])
        stages.append(row)
    h = plan.hyp
    return {
        "format_version": FORMAT_VERSION,
        "model": plan.model.to_dict(),
        "shape": shape,
        "kind": plan.kind.value,
        "hypotheses": {
            "cuts": _reals(h.cuts),
            "indiff_lo": _reals(h.indiff_lo),
            "indiff_hi": _reals(h.indiff_hi),
            "risks": _reals(h.risks),
        },
        "stages": stages,
        "risks": [_reals(r) for r in plan.risks],
        "zeta": None if plan.zeta is None else format_real(plan.zeta),
        "nbar": None if plan.nbar is None else _size(plan, plan.nbar),
        "warnings": list(plan.warnings),
        "provenance": {"tool_version": _tool_version(), "certificate_digest": certificate_digest},
    }


def _floats(vals) -> tuple:
    return tuple(parse_real(v) for v in vals)


def plan_from_document(doc: Any) -> TestPlan:
    """Validate ``doc`` against :data:`PLAN_SCHEMA` and rebuild the plan.

    Raises:
        PlanFormatError: Schema violation, inconsistent hypotheses or broken
            plan invariants.
    """
    try:
        jsonschema.validate(doc, PLAN_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise PlanFormatError(f"invalid plan document: {exc.message}") from None
    try:
        model = ModelSpec.from_dict(doc["model"])
        sd = doc["shape"]
        shape = TestShape.from_dict(
            {
                "kind": sd["kind"],
                "values": _floats(sd["values"]),
                "risks": _floats(sd["risks"]),
                "extra": [_floats(e) for e in sd.get("extra", [])],
            }
        )
        hyp = reduce_shape(shape).hyp
        hd = doc["hypotheses"]
        stored = (_floats(hd["cuts"]), _floats(hd["indiff_lo"]), _floats(hd["indiff_hi"]), _floats(hd["risks"]))
        if stored != (hyp.cuts, hyp.indiff_lo, hyp.indiff_hi, hyp.risks):
            raise PlanFormatError("hypotheses do not match the shape")
        stages = doc["stages"]
        cast = float if model.continuous_time else int
        sizes = tuple(cast(parse_real(st["size"])) for st in stages)
        has_y = [("size_y" in st) for st in stages]
        if any(has_y) and not all(has_y):
            raise PlanFormatError("size_y must be given for every stage or none")
        sizes_y = tuple(int(st["size_y"]) for st in stages) if all(has_y) else None
        k = hyp.m - 1
        lower = tuple(_floats(st["lower"]) for st in stages)
        upper = tuple(_floats(st["upper"]) for st in stages)
        if any(len(r) != k for r in lower + upper):
            raise PlanFormatError(f"each stage needs {k} lower and {k} upper thresholds")
        risks = tuple(_floats(r) for r in doc["risks"])
        if len(risks) != k:
            raise PlanFormatError(f"need {k} risk pairs")
        nbar = doc.get("nbar")
        plan = TestPlan(
            model=model,
            kind=BoundaryKind(doc["kind"]),
            shape=shape,
            hyp=hyp,
            sizes=sizes,
            lower=lower,
            upper=upper,
            risks=risks,
            zeta=None if doc["zeta"] is None else parse_real(doc["zeta"]),
            nbar=None if nbar is None else cast(parse_real(nbar)),
            sizes_y=sizes_y,
            warnings=tuple(doc.get("warnings", ())),
        )
    except PlanFormatError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise PlanFormatError(f"invalid plan document: {exc}") from None
    if any(not a < b for a, b in zip(sizes, sizes[1:])):
        raise PlanFormatError("stage sizes must be strictly increasing")
    try:
        _check_invariants(plan)
    except Exception as exc:
        raise PlanFormatError(str(exc)) from None
    return plan


def dumps_plan(plan: TestPlan, certificate_digest: Optional[str] = None) -> str:
    return json.dumps(plan_to_document(plan, certificate_digest), indent=2) + "\n"


def loads_plan(text: str) -> TestPlan:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"not valid JSON: {exc}") from None
    return plan_from_document(doc)


def save_plan(plan: TestPlan, path, certificate_digest: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_plan(plan, certificate_digest))


def load_plan(path) -> TestPlan:
    with open(path, encoding="utf-8") as fh:
        return loads_plan(fh.read())
