"""Experiment configuration: JSON schema, semantic checks and object builders.

A config is one JSON document with three sections::

    {
      "model": {"type": "two-level", "intercepts": [0, 0], "slopes": [1, -1],
                "widths": [1, 0], "omega": 0.25},
      "experiment": {"type": "find-ep", "initial": {"lambda": 0.1, "omega": 0.3}},
      "output": {"directory": "out", "formats": ["csv", "json", "txt"]}
    }

Grids are either ``{"start": a, "stop": b, "num": n}`` (inclusive, like
``numpy.linspace``) or ``{"values": [...]}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List

import jsonschema
import numpy as np

from .continuation import Circle, Convention, LoopPath, Orientation, Polyline
from .errors import ContractViolation
from .model import (
    EffectiveHamiltonianModel,
    ParameterPoint,
    TwoLevelModel,
    constant_form_factor,
    ratio_form_factor,
)

EXPERIMENTS = (
    "sweep",
    "surface",
    "classify",
    "find-ep",
    "loop",
    "period",
    "smatrix",
    "poles",
    "trapping",
    "smoothness",
)
TWO_LEVEL_ONLY = {"sweep", "surface", "classify", "find-ep", "loop", "period", "smoothness"}
FORMATS = ("csv", "json", "txt")

_num = {"type": "number"}
_point = {
    "type": "object",
    "required": ["lambda", "omega"],
    "properties": {"lambda": _num, "omega": _num},
    "additionalProperties": False,
}
_grid = {
    "type": "object",
    "oneOf": [
        {
            "required": ["start", "stop", "num"],
            "properties": {"start": _num, "stop": _num, "num": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        {
            "required": ["values"],
            "properties": {"values": {"type": "array", "items": _num, "minItems": 1}},
            "additionalProperties": False,
        },
    ],
}
_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _num}}


def _when(kind: str, then: dict) -> dict:
    return {"if": {"properties": {"type": {"const": kind}}, "required": ["type"]}, "then": then}


_path = {
    "type": "object",
    "required": ["center", "shape"],
    "properties": {
        "center": _point,
        "shape": {"enum": ["circle", "polyline"]},
        "radius_lambda": {"type": "number", "exclusiveMinimum": 0},
        "radius_omega": {"type": "number", "exclusiveMinimum": 0},
        "vertices": {
            "type": "array",
            "minItems": 3,
            "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        },
    },
    "allOf": [
        {
            "if": {"properties": {"shape": {"const": "circle"}}},
            "then": {"required": ["radius_lambda"]},
        },
        {
            "if": {"properties": {"shape": {"const": "polyline"}}},
            "then": {"required": ["vertices"]},
        },
    ],
}

_loop_props = {
    "path": _path,
    "steps": {"type": "integer", "minimum": 16},
    "orientation": {"enum": [o.value for o in Orientation]},
    "turns": {"type": "integer", "minimum": 1},
    "convention": {"enum": [c.value for c in Convention]},
    "delta_min": {"type": "number", "exclusiveMinimum": 0},
    "branch_points": {"type": "array", "items": _point},
}

SCHEMA = {
    "type": "object",
    "required": ["model", "experiment"],
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["two-level", "n-level"]}},
            "allOf": [
                _when(
                    "two-level",
                    {
                        "required": ["slopes", "widths"],
                        "properties": {
                            "type": True,
                            "intercepts": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                            "slopes": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                            "widths": {
                                "type": "array",
                                "items": {"type": "number", "minimum": 0},
                                "minItems": 2,
                                "maxItems": 2,
                            },
                            "omega": _num,
                        },
                        "additionalProperties": False,
                    },
                ),
                _when(
                    "n-level",
                    {
                        "required": ["h0", "w"],
                        "properties": {
                            "type": True,
                            "h0": _matrix,
                            "w": _matrix,
                            "form_factor": {
                                "type": "object",
                                "required": ["kind"],
                                "properties": {
                                    "kind": {"enum": ["constant", "ratio"]},
                                    "shift": {"type": "number", "exclusiveMinimum": 0},
                                },
                                "additionalProperties": False,
                            },
                        },
                        "additionalProperties": False,
                    },
                ),
            ],
        },
        "experiment": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": list(EXPERIMENTS)}},
            "allOf": [
                _when("sweep", {"required": ["lambda"], "properties": {"lambda": _grid, "omega": _num}}),
                _when("surface", {"required": ["lambda", "omega"], "properties": {"lambda": _grid, "omega": _grid}}),
                _when("classify", {"required": ["omega"], "properties": {"omega": _grid}}),
                _when(
                    "find-ep",
                    {
                        "properties": {
                            "initial": {"oneOf": [_point, {"const": "random"}]},
                            "starts": {"type": "integer", "minimum": 1},
                            "box": {
                                "type": "object",
                                "required": ["lambda", "omega"],
                                "properties": {
                                    "lambda": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                                    "omega": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                                },
                            },
                        }
                    },
                ),
                _when("loop", {"required": ["path"], "properties": _loop_props}),
                _when(
                    "period",
                    {
                        "required": ["path"],
                        "properties": dict(_loop_props, max_turns={"type": "integer", "minimum": 1, "maximum": 8}),
                    },
                ),
                _when("smatrix", {"required": ["energies"], "properties": {"energies": _grid, "point": _point}}),
                _when("poles", {"properties": {"point": _point}}),
                _when(
                    "trapping",
                    {"required": ["alpha"], "properties": {"alpha": _grid, "energy": _num, "point": _point}},
                ),
                _when(
                    "smoothness",
                    {
                        "required": ["deltas", "energies"],
                        "properties": {
                            "ep": _point,
                            "direction": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                            "deltas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                            "energies": _grid,
                        },
                    },
                ),
            ],
        },
        "output": {
            "type": "object",
            "properties": {
                "directory": {"type": "string", "minLength": 1},
                "formats": {"type": "array", "items": {"enum": list(FORMATS)}, "uniqueItems": True},
            },
            "additionalProperties": False,
        },
    },
}


class ConfigError(ContractViolation):
    """The config file could not be read or parsed."""


@dataclass
class Issue:
    path: str
    message: str

    def as_dict(self):
        return {"path": self.path, "message": self.message}


@dataclass
class ValidationReport:
    violations: List[Issue] = field(default_factory=list)
    warnings: List[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self):
        return {
            "valid": self.ok,
            "violations": [v.as_dict() for v in self.violations],
            "warnings": [w.as_dict() for w in self.warnings],
        }


def load(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {str(p)!r}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {str(p)!r} is not valid JSON: {exc}") from exc
    return doc


def _pointer(parts) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in parts) if parts else ""


def grid(spec: dict) -> np.ndarray:
    if "values" in spec:
        return np.asarray(spec["values"], dtype=float)
    return np.linspace(spec["start"], spec["stop"], int(spec["num"]))


def validate(doc: Any) -> ValidationReport:
    """Structural (schema) and semantic checks; nothing is computed."""
    rep = ValidationReport()
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    for err in errors:
        if err.validator in ("if", "allOf"):
            continue
        msg = err.message
        if err.validator == "enum" and list(err.absolute_path)[-1:] == ["type"] and "experiment" in err.absolute_path:
            msg = f"unknown experiment {err.instance!r}; valid experiments: {', '.join(EXPERIMENTS)}"
        rep.violations.append(Issue(_pointer(err.absolute_path), msg))
    if rep.violations:
        return rep
    _semantic(doc, rep)
    return rep


def _semantic(doc: dict, rep: ValidationReport) -> None:
    model, exp = doc["model"], doc["experiment"]
    kind = exp["type"]
    if model["type"] == "n-level":
        h0 = model["h0"]
        n = len(h0)
        if any(len(row) != n for row in h0):
            rep.violations.append(Issue("/model/h0", "h0 must be square"))
        elif not np.array_equal(np.array(h0, float), np.array(h0, float).T):
            rep.violations.append(Issue("/model/h0", "h0 must be symmetric"))
        w = model["w"]
        if len(w) != n:
            rep.violations.append(Issue("/model/w", f"w must have {n} rows (one per state)"))
        elif len({len(r) for r in w}) != 1:
            rep.violations.append(Issue("/model/w", "all rows of w must have the same length"))
        if n > 64:
            rep.violations.append(Issue("/model/h0", "at most 64 states are supported"))
        if kind in TWO_LEVEL_ONLY:
            rep.violations.append(Issue("/experiment/type", f"experiment {kind!r} needs a two-level model"))
    else:
        if kind in ("smatrix", "poles") and "point" not in exp:
            rep.violations.append(Issue("/experiment/point", "a two-level model needs a parameter point"))
        slopes = model["slopes"]
        if kind in ("classify", "find-ep", "smoothness", "loop", "period") and slopes[0] == slopes[1]:
            rep.violations.append(Issue("/model/slopes", "levels are parallel; there is no crossing"))
    for key in ("lambda", "omega", "energies", "alpha"):
        spec = exp.get(key)
        if isinstance(spec, dict):
            g = grid(spec)
            if g.size == 0:
                rep.violations.append(Issue(f"/experiment/{key}", "grid is empty"))
            elif not np.all(np.isfinite(g)):
                rep.violations.append(Issue(f"/experiment/{key}", "grid has non-finite values"))
            elif g.size > 1 and key in ("lambda", "omega") and kind == "surface" and not (
                np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)
            ):
                rep.violations.append(Issue(f"/experiment/{key}", "grid must be strictly monotone"))
            elif key == "alpha" and (np.any(g < 0) or np.any(np.diff(g) < 0)):
                rep.violations.append(Issue("/experiment/alpha", "alpha grid must be nonnegative and ascending"))
    if kind in ("loop", "period"):
        _check_loop(doc, rep)


def _check_loop(doc: dict, rep: ValidationReport) -> None:
    exp = doc["experiment"]
    try:
        path = build_path(exp)
    except ContractViolation as exc:
        rep.violations.append(Issue("/experiment/path", str(exc)))
        return
    delta = exp.get("delta_min", 1e-3)
    declared = [ParameterPoint(p["lambda"], p["omega"]) for p in exp.get("branch_points", [])]
    try:
        from .branch import known_branch_points

        declared += known_branch_points(build_model(doc["model"]))
    except ContractViolation:
        pass
    for bp in declared:
        d = path.min_distance([bp])
        if d < delta:
            rep.warnings.append(
                Issue(
                    "/experiment/path",
                    f"path passes within {d:.3g} of branch point ({bp.lam:g}, {bp.omega:g}) (delta_min={delta:g})",
                )
            )


def build_model(spec: dict):
    if spec["type"] == "two-level":
        w = spec["widths"]
        return TwoLevelModel(
            intercepts=tuple(spec.get("intercepts", (0.0, 0.0))),
            slopes=tuple(spec["slopes"]),
            gamma1=w[0],
            gamma2=w[1],
            omega=spec.get("omega", 0.0),
        )
    w = np.asarray(spec["w"], dtype=float)
    ff = spec.get("form_factor", {"kind": "constant"})
    if ff["kind"] == "ratio":
        ffs = [ratio_form_factor(ff.get("shift", 1.0)) for _ in range(w.shape[1])]
    else:
        ffs = [constant_form_factor() for _ in range(w.shape[1])]
    return EffectiveHamiltonianModel(spec["h0"], w, ffs)


def point(spec: dict) -> ParameterPoint:
    return ParameterPoint(float(spec["lambda"]), float(spec["omega"]))


def build_path(exp: dict) -> LoopPath:
    p = exp["path"]
    if p["shape"] == "circle":
        shape = Circle(p["radius_lambda"], p.get("radius_omega"))
    else:
        shape = Polyline(tuple(tuple(v) for v in p["vertices"]))
    return LoopPath(
        center=point(p["center"]),
        shape=shape,
        steps=exp.get("steps", 512),
        orientation=exp.get("orientation", "positive"),
        turns=exp.get("turns", 1),
    )


def is_finite_number(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)
