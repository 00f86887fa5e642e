"""JSON run configuration: schema, defaults and validation."""
from __future__ import annotations

import copy
import json
import math

import jsonschema

_POS = {"type": "number", "exclusiveMinimum": 0}
_RES = {"type": "integer", "minimum": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "shape": {
            "type": "object", "additionalProperties": False, "required": ["kind", "L", "D"],
            "properties": {"kind": {"enum": ["Rod", "BentCore", "SpheroTriangle"]}, "L": _POS, "D": _POS,
                           "theta": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
                           "N": {"type": "integer", "minimum": 2}},
        },
        "potential": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["HardCore", "LennardJones"]}, "epsilon": _POS, "T": _POS},
        },
        "quadrature": {
            "type": "object", "additionalProperties": False,
            "properties": {"n_alpha": _RES, "n_beta": _RES, "n_gamma": _RES},
        },
        "orientation": {
            "type": "object", "additionalProperties": False,
            "properties": {"euler": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                           "matrix": {"type": "array", "minItems": 3, "maxItems": 3,
                                      "items": {"type": "array", "items": {"type": "number"},
                                                "minItems": 3, "maxItems": 3}}},
        },
        "exvol": {
            "type": "object", "additionalProperties": False,
            "properties": {"method": {"enum": ["auto", "analytic", "slab2d", "montecarlo", "soft"]},
                           "n_samples": {"type": "integer", "minimum": 10000},
                           "grid_n": {"type": "integer", "minimum": 2}},
        },
        "kernel": {
            "type": "object", "additionalProperties": False,
            "properties": {"symmetry_class": {"enum": ["Dinf_h", "Cinf", "C2v_quadratic", "C2v_cubic"]},
                           "coeffs": {"type": "array", "items": {"type": "number"}},
                           "source": {"enum": ["manual", "exvol", "onsager", "analytic"]},
                           "convention": {"enum": ["printed", "corrected"]},
                           "c": _POS,
                           "k_samples": {"type": "integer", "minimum": 10000}},
        },
        "scf": {
            "type": "object", "additionalProperties": False,
            "properties": {"damping": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}, "tol": _POS,
                           "max_iter": {"type": "integer", "minimum": 1},
                           "align_frame": {"type": "boolean"},
                           "seeds": {"type": "array", "minItems": 1,
                                     "items": {"enum": ["Isotropic", "UniaxialSeed", "BiaxialSeed", "PolarSeed"]}}},
        },
        "sweep": {
            "type": "object", "additionalProperties": False, "required": ["param", "from", "to", "steps"],
            "properties": {"param": {"enum": ["c", "theta", "alpha", "beta", "gamma"]},
                           "from": {"type": "number"}, "to": {"type": "number"},
                           "steps": {"type": "integer", "minimum": 1}},
        },
        "verify": {
            "type": "object", "additionalProperties": False,
            "properties": {"only": {"type": "array", "items": {"type": ["string", "integer"]}},
                           "overrides": {"type": "object"}},
        },
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
    },
}

DEFAULTS = {
    "quadrature": {"n_alpha": 16, "n_beta": 16, "n_gamma": 16},
    "exvol": {"method": "auto", "n_samples": 10_000_000, "grid_n": 80},
    "scf": {"damping": 0.5, "tol": 1e-10, "max_iter": 5000, "align_frame": False,
            "seeds": ["Isotropic", "UniaxialSeed", "BiaxialSeed", "PolarSeed"]},
    "seed": 0,
}


class ConfigError(ValueError):
    pass


def resolve(raw: dict) -> dict:
    """Validate ``raw`` and fill defaults; raises ConfigError."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    cfg = copy.deepcopy(raw)
    for key, val in DEFAULTS.items():
        if isinstance(val, dict):
            cfg[key] = {**val, **cfg.get(key, {})}
        else:
            cfg.setdefault(key, val)
    sh = cfg.get("shape")
    if sh and sh["kind"] != "Rod" and "theta" not in sh:
        raise ConfigError(f"config error at shape: {sh['kind']} needs theta")
    if sh and sh["kind"] == "Rod" and "theta" in sh:
        raise ConfigError("config error at shape: a rod takes no theta")
    return cfg


def load(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw
