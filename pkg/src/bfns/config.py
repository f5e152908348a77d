"""JSON run configuration: schema validation and builders.

A config document has four fixed sections (physics, discretization,
forcing, initial) plus optional experiment blocks (stability, kneser,
attractor).  Unknown keys are rejected everywhere.  The cutoff level may be
the string "inf" since JSON has no infinity literal.
"""

from __future__ import annotations

import json
import math

import jsonschema

from . import fields as fl
from .dynamics import SimConfig
from .errors import ConfigError

_MODE_ENTRY = {
    "type": "object",
    "properties": {
        "k": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 3},
        "component": {"type": "integer", "minimum": 0, "maximum": 2},
        "re": {"type": "number"},
        "im": {"type": "number"},
    },
    "required": ["k", "component", "re"],
    "additionalProperties": False,
}

_GRID = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "physics": {
            "type": "object",
            "properties": {
                "mu": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "minimum": 1},
                "n_cut": {
                    "anyOf": [
                        {"type": "number", "exclusiveMinimum": 0},
                        {"const": "inf"},
                    ]
                },
            },
            "required": ["mu", "alpha", "beta", "n_cut"],
            "additionalProperties": False,
        },
        "discretization": {
            "type": "object",
            "properties": {
                "d": {"enum": [2, 3]},
                "k_modes": {"type": "integer", "minimum": 1},
                "grid_m": {"type": "integer", "minimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "tau": {"type": "number"},
                "t_end": {"type": "number"},
                "snapshot_stride": {"type": "integer", "minimum": 1},
            },
            "required": ["d", "k_modes", "dt", "t_end"],
            "additionalProperties": False,
        },
        "forcing": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["zero", "modes"]},
                "modes": {"type": "array", "items": _MODE_ENTRY},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["zero", "modes", "random"]},
                "modes": {"type": "array", "items": _MODE_ENTRY},
                "seed": {"type": "integer", "minimum": 0},
                "h_norm": {"type": "number", "exclusiveMinimum": 0},
                "decay": {"type": "number"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "stability": {
            "type": "object",
            "properties": {
                "eps_grid": _GRID,
                "delta_grid": _GRID,
                "eta_grid": _GRID,
                "direction_seed": {"type": "integer", "minimum": 0},
                "include_mixed": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "kneser": {
            "type": "object",
            "properties": {
                "levels": {"type": "integer", "minimum": 2},
                "base_cells": {"type": "integer", "minimum": 1},
                "t_star": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "attractor": {
            "type": "object",
            "properties": {
                "n_seeds": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "seed_h_norm": {"type": "number", "exclusiveMinimum": 0},
                "t_transient": {"type": "number", "exclusiveMinimum": 0},
                "t_sample": {"type": "number", "exclusiveMinimum": 0},
                "n_snapshots": {"type": "integer", "minimum": 1},
                "probe_count": {"type": "integer", "minimum": 1},
                "probe_seed": {"type": "integer", "minimum": 0},
                "probe_h_norm": {"type": "number", "exclusiveMinimum": 0},
                "t_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
            "required": ["n_seeds", "t_transient", "n_snapshots", "t_grid"],
            "additionalProperties": False,
        },
    },
    "required": ["physics", "discretization", "forcing", "initial"],
    "additionalProperties": False,
}


def validate_config(doc):
    """Schema-check a parsed document; raises ConfigError with the path."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    return doc


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(doc)


def _field_from_modes(d, K, modes):
    entries = [
        {"k": m["k"], "component": m["component"], "re": m["re"], "im": m.get("im", 0.0)}
        for m in modes
    ]
    return fl.SpectralField.from_modes(d, K, entries)


def build_forcing(doc):
    d = doc["discretization"]["d"]
    K = doc["discretization"]["k_modes"]
    sec = doc["forcing"]
    if sec["kind"] == "zero":
        if sec.get("modes"):
            raise ConfigError("zero forcing must not list modes")
        return fl.SpectralField.zeros(d, K)
    if "modes" not in sec:
        raise ConfigError("mode forcing needs a modes list")
    return _field_from_modes(d, K, sec["modes"])


def build_initial(doc):
    d = doc["discretization"]["d"]
    K = doc["discretization"]["k_modes"]
    sec = doc["initial"]
    kind = sec["kind"]
    if kind == "zero":
        return fl.SpectralField.zeros(d, K)
    if kind == "modes":
        if "modes" not in sec:
            raise ConfigError("mode initial state needs a modes list")
        return _field_from_modes(d, K, sec["modes"])
    if "seed" not in sec:
        raise ConfigError("random initial state needs a seed")
    return fl.random_solenoidal(
        d, K, seed=sec["seed"],
        h_norm_target=sec.get("h_norm", 1.0), decay=sec.get("decay", 2.0),
    )


def build_sim_config(doc):
    phys = doc["physics"]
    disc = doc["discretization"]
    n_cut = math.inf if phys["n_cut"] == "inf" else float(phys["n_cut"])
    try:
        return SimConfig(
            d=disc["d"],
            K=disc["k_modes"],
            mu=phys["mu"],
            alpha=phys["alpha"],
            beta=phys["beta"],
            n_cut=n_cut,
            dt=disc["dt"],
            t_end=disc["t_end"],
            tau=disc.get("tau", 0.0),
            grid_m=disc.get("grid_m", 0),
            snapshot_stride=disc.get("snapshot_stride", 1),
            forcing=build_forcing(doc),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def experiment_block(doc, name):
    if name not in doc:
        raise ConfigError(f"config has no {name} block")
    return doc[name]
