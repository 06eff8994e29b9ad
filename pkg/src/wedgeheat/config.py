"""Run configuration: TOML files validated against one JSON schema per command.

A config file looks like::

    seed = 0

    [model]
    m = 5
    sigma_length = 6.283185307179586

    [model.fiber]
    kind = "round_sphere"      # or "flat_torus", "circle"
    radius = 1.25

    [extract_c]
    t_min = 4e-4

Command parameters live in a table named after the command (``-`` becomes
``_``). Unknown keys are rejected so typos surface as config errors.
"""

from __future__ import annotations

import copy
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import jsonschema

from .chart_geometry import Circle, FlatTorus, RoundSphere
from .errors import ConfigError
from .wedge_geometry import WedgeModel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("curvature", "invariants", "coefficient", "expansion", "spectrum", "trace", "extract-c")

ENV_OUT = "WEDGEHEAT_OUT"
ENV_THREADS = "WEDGEHEAT_THREADS"

_POS = {"type": "number", "exclusiveMinimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}

FIBER_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["round_sphere", "flat_torus", "circle"]},
        "radius": _POS,
        "sides": {"type": "array", "items": _POS, "minItems": 1},
        "side": _POS,
        "length": _POS,
        "resolution": {"type": "integer", "minimum": 2, "maximum": 256},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "round_sphere"}}},
         "then": {"not": {"anyOf": [{"required": ["sides"]}, {"required": ["side"]},
                                    {"required": ["length"]}]}}},
        {"if": {"properties": {"kind": {"const": "flat_torus"}}},
         "then": {"not": {"anyOf": [{"required": ["radius"]}, {"required": ["length"]}]}}},
        {"if": {"properties": {"kind": {"const": "circle"}}},
         "then": {"not": {"anyOf": [{"required": ["radius"]}, {"required": ["sides"]},
                                    {"required": ["side"]}]}}},
    ],
}

MODEL_SCHEMA = {
    "type": "object",
    "required": ["m", "fiber"],
    "additionalProperties": False,
    "properties": {
        "m": {"type": "integer", "minimum": 3, "maximum": 8},
        "sigma_length": _POS,
        "fiber": FIBER_SCHEMA,
    },
}

_T_GRID = {
    "t": {"type": "array", "items": _POS, "minItems": 1},
    "t_min": _POS,
    "t_max": _POS,
    "n_t": _POS_INT,
}

COMMAND_SCHEMAS = {
    "curvature": {
        "n_points": _POS_INT,
        "tol": {"type": "number", "minimum": 0},
        "mixed_tol": {"type": "number", "minimum": 0},
    },
    "invariants": {
        "n_points": _POS_INT,
        "d": _POS_INT,
        "J": {"type": "integer", "minimum": 0},
        "r": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0,
                                         "exclusiveMaximum": 1}, "minItems": 1},
        "convention": {"enum": ["normalized", "literal"]},
    },
    "coefficient": {
        "tol": {"type": "number", "minimum": 0},
        "convention": {"enum": ["normalized", "literal"]},
    },
    "expansion": {
        "d": _POS_INT,
        "J": {"type": "integer", "minimum": 0},
        "convention": {"enum": ["normalized", "literal"]},
    },
    "spectrum": {
        "lambda_max": _POS,
        "fiber_cutoff": _POS,
    },
    "trace": dict(_T_GRID, lambda_max=_POS, tol=_POS),
    "extract-c": dict(_T_GRID, lambda_max=_POS, tail_rtol=_POS, cond_threshold=_POS,
                      basis_top={"type": "string", "pattern": r"^-?[0-9]+(/2)?$"}),
}

COMMAND_DEFAULTS = {
    "curvature": {"n_points": 50, "tol": 1e-8, "mixed_tol": 1e-9},
    "invariants": {"n_points": 8, "J": 2, "r": [0.25, 0.5, 0.75], "convention": "normalized"},
    "coefficient": {"tol": 1e-10, "convention": "normalized"},
    "expansion": {"J": 2, "convention": "normalized"},
    "spectrum": {"lambda_max": 2e4},
    "trace": {"lambda_max": 2e4, "t_min": 1e-3, "t_max": 1.0, "n_t": 40},
    "extract-c": {"t_min": 4e-4, "t_max": 1e-2, "n_t": 60, "tail_rtol": 1e-15,
                  "cond_threshold": 1e12, "basis_top": "3/2"},
}


def section_name(command: str) -> str:
    return command.replace("-", "_")


def config_schema(command: str) -> dict:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", key_path="command")
    section = {"type": "object", "additionalProperties": False,
               "properties": COMMAND_SCHEMAS[command]}
    props = {
        "command": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "threads": _POS_INT,
        "out": {"type": "string", "minLength": 1},
        "model": MODEL_SCHEMA,
    }
    # sections of other commands may share one file; only ours is strictly checked
    for other in COMMANDS:
        props[section_name(other)] = {"type": "object"}
    props[section_name(command)] = section
    return {"type": "object", "required": ["model"], "additionalProperties": False,
            "properties": props}


def _key_path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        parts += missing[:1]
    elif err.validator == "additionalProperties":
        allowed = err.schema.get("properties", {})
        extra = sorted(k for k in err.instance if k not in allowed)
        parts += extra[:1]
    elif err.validator == "not" and isinstance(err.instance, dict):
        clash = [k for k in ("radius", "sides", "side", "length") if k in err.instance]
        parts += clash[:1]
    return ".".join(parts)


def validate(raw: dict, command: str) -> None:
    validator = jsonschema.Draft202012Validator(config_schema(command))
    err = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if err is not None:
        path = _key_path(err)
        if err.validator == "not":
            msg = f"parameter {path.rsplit('.', 1)[-1]!r} not allowed for this fiber kind"
        else:
            msg = err.message
        raise ConfigError(f"invalid config at {path or '<root>'}: {msg}", key_path=path)


def build_model(spec: dict) -> WedgeModel:
    m = spec["m"]
    f = spec["fiber"]
    extra = {"resolution": f["resolution"]} if "resolution" in f else {}
    kind = f["kind"]
    if kind == "round_sphere":
        fiber = RoundSphere(m - 2, f.get("radius", 1.0), **extra)
    elif kind == "flat_torus":
        if "sides" in f and "side" in f:
            raise ConfigError("give either sides or side, not both", key_path="model.fiber.side")
        sides = f.get("sides", [f.get("side", 1.0)] * (m - 2))
        if len(sides) != m - 2:
            raise ConfigError(f"flat torus needs m - 2 = {m - 2} sides, got {len(sides)}",
                              key_path="model.fiber.sides")
        fiber = FlatTorus(tuple(sides), **extra)
    else:
        if m != 3:
            raise ConfigError("a circle fiber needs m = 3", key_path="model.m")
        fiber = Circle(f.get("length", 2.0 * math.pi), **extra)
    return WedgeModel(m, fiber, spec.get("sigma_length", 2.0 * math.pi))


@dataclass
class RunConfig:
    command: str
    model: WedgeModel
    params: dict
    out_dir: str
    seed: int = 0
    threads: int = 1
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """The effective configuration, defaults filled in."""
        out = copy.deepcopy(self.raw)
        out[section_name(self.command)] = dict(self.params)
        out["seed"] = self.seed
        return out


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", key_path="") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file is not valid TOML: {exc}", key_path="") from None


def _env_threads():
    val = os.environ.get(ENV_THREADS)
    if val is None:
        return None
    try:
        n = int(val)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"{ENV_THREADS} must be a positive integer, got {val!r}",
                          key_path=ENV_THREADS)
    return n


def make_config(command: str, raw: dict, out: str | None = None, threads: int | None = None,
                seed: int | None = None) -> RunConfig:
    """Validate ``raw`` for ``command`` and resolve overrides (flag > environment > file)."""
    validate(raw, command)
    if "command" in raw and raw["command"] != command:
        raise ConfigError(f"config is for command {raw['command']!r}, not {command!r}",
                          key_path="command")
    params = dict(COMMAND_DEFAULTS[command])
    params.update(raw.get(section_name(command), {}))
    if "t" in params:
        for k in ("t_min", "t_max", "n_t"):
            params.pop(k, None)
    elif params.get("t_min", 0) >= params.get("t_max", math.inf):
        raise ConfigError("t_min must be below t_max", key_path=f"{section_name(command)}.t_min")
    if "basis_top" in params:
        params["basis_top"] = str(Fraction(params["basis_top"]))
    try:
        model = build_model(raw["model"])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid model: {exc}", key_path="model") from None
    if threads is None:
        threads = _env_threads()
    if threads is None:
        threads = raw.get("threads", 1)
    if threads < 1:
        raise ConfigError("threads must be >= 1", key_path="threads")
    out_dir = out or os.environ.get(ENV_OUT) or raw.get("out") or "wedgeheat_out"
    seed = raw.get("seed", 0) if seed is None else seed
    if seed < 0:
        raise ConfigError("seed must be >= 0", key_path="seed")
    return RunConfig(command, model, params, out_dir, seed, threads, raw)


def load_config(command: str, path, **overrides) -> RunConfig:
    return make_config(command, load_toml(path), **overrides)
