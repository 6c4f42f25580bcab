"""Run configuration: YAML text validated against a JSON schema."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import jsonschema
import yaml

EXPERIMENTS = (
    "lightcone", "truncation", "correlation_spread", "holevo",
    "entropy_growth", "tqo", "lower_bound", "ghz_protocol",
)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_int = {"type": "integer"}
_range = {
    "oneOf": [
        {"type": "array", "items": _num, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _num, "stop": _num, "step": _pos},
            "required": ["start", "stop", "step"],
            "additionalProperties": False,
        },
    ]
}
_graph = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["chain", "torus2d", "toric"]},
        "n": {"type": "integer", "minimum": 2},
        "periodic": {"type": "boolean"},
        "nx": {"type": "integer", "minimum": 2},
        "ny": {"type": "integer", "minimum": 2},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_state = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["zero", "plus", "ghz", "basis", "schmidt", "random"]},
        "bits": {"type": "string", "pattern": "^[01]+$"},
        "x": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seed": _int,
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lrlab run configuration",
    "type": "object",
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "threads": {"type": "integer", "minimum": 1},
        "model": {
            "type": "object",
            "properties": {
                "name": {"enum": ["tfim", "heisenberg", "toric", "product"]},
                "graph": _graph,
                "J": _num,
                "h": _num,
                "nx": {"type": "integer", "minimum": 2},
                "ny": {"type": "integer", "minimum": 2},
                "ja": {"type": "string", "pattern": "^[XYZ]$"},
                "jb": {"type": "string", "pattern": "^[XYZ]$"},
                "r": _num,
            },
            "required": ["name"],
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "properties": {"L": _range, "t": _range, "l": _range, "n": _range},
            "additionalProperties": False,
        },
        "observables": {
            "type": "object",
            "properties": {
                "a": {"type": "string", "pattern": "^[XYZ]$"},
                "b": {"type": "string", "pattern": "^[XYZ]$"},
                "site_a": {"type": "integer", "minimum": 0},
                "site_b": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "regions": {
            "type": "object",
            "properties": {
                "A": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "B": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "initial_state": _state,
        "pair": {"enum": ["ghz", "toric_ground", "product", "local_flip"]},
        "protocol": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["toric_prep", "random", "idle"]},
                "depth": {"type": "integer", "minimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "threshold": _pos,
        "t_max": _pos,
        "plan": {
            "type": "object",
            "properties": {
                "dt": _pos,
                "tolerance": _pos,
                "method": {"enum": ["exact-step", "trotter-1", "trotter-2"]},
                "backend": {"enum": ["auto", "dense", "krylov"]},
            },
            "additionalProperties": False,
        },
        "bounds": {
            "type": "object",
            "properties": {"c": _pos, "v": _pos, "xi": _pos},
            "required": ["c", "v", "xi"],
            "additionalProperties": False,
        },
    },
    "required": ["experiment", "model"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Config text could not be parsed or failed validation.

    ``errors`` lists every problem as "path: message".
    """

    def __init__(self, errors: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    model: dict
    seed: int = 0
    output_dir: str = "out"
    threads: int = 1
    grid: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    regions: dict = field(default_factory=dict)
    initial_state: dict = field(default_factory=lambda: {"kind": "zero"})
    pair: str | None = None
    protocol: dict = field(default_factory=lambda: {"kind": "idle"})
    threshold: float | None = None
    t_max: float | None = None
    plan: dict = field(default_factory=dict)
    bounds: dict | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate(data: Any) -> list[str]:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [f"{_path(e)}: {e.message}" for e in errors]


def parse_config(text: str) -> RunConfig:
    """Parse YAML text into a validated :class:`RunConfig`; raises :class:`ConfigError`."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "unknown line"
        raise ConfigError([f"syntax error at {where}: {getattr(exc, 'problem', exc)}"]) from None
    if data is None:
        data = {}
    errors = validate(data)
    if errors:
        raise ConfigError(errors)
    return RunConfig(**data, raw=data)


def expand_range(spec) -> list[float]:
    if isinstance(spec, dict):
        n = int(round((spec["stop"] - spec["start"]) / spec["step"])) + 1
        vals = [spec["start"] + i * spec["step"] for i in range(n)]
        return [round(v, 12) for v in vals if v <= spec["stop"] + 1e-12]
    return list(spec)
