"""Flat JSON run configuration.

A config file is a single JSON object whose keys are the names listed in
:data:`SCHEMA`. Command-line flags override file values; anything unset
falls back to the schema default. Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Malformed or unknown configuration entries (a usage error)."""


@dataclass(frozen=True)
class Option:
    type: type
    default: object
    help: str


SCHEMA = {
    "dim": Option(int, 1, "spatial dimension (1..4)"),
    "n": Option(int, 256, "grid points per axis (power of two)"),
    "L": Option(float, 2.0 * math.pi, "box length"),
    "dt": Option(float, None, "time step (default: half the CFL bound)"),
    "T": Option(float, 1.0, "final time"),
    "epsilon": Option(float, 0.1, "Besov size of the initial bump"),
    "seed": Option(int, 0, "Philox seed for bump directions and ensembles"),
    "radius": Option(float, None, "bump radius (default L/8)"),
    "renormalize": Option(bool, False, "project onto the sphere after each step"),
    "save_stride": Option(int, 10, "steps between recorded frames"),
    "symbol": Option(str, "sqrt_commutator", "bilinear symbol registry name"),
    "k1": Option(int, -4, "low-frequency shell of the bilinear symbol"),
    "k2": Option(int, 0, "high-frequency shell of the bilinear symbol"),
    "M": Option(int, 8, "expansion order"),
    "j_max": Option(int, 6, "outer Picard budget"),
    "i_max": Option(int, 8, "inner Picard budget"),
    "tol": Option(float, 1e-10, "Picard stopping tolerance"),
    "floor": Option(float, 1e-12, "equivalence floor on sup X energy"),
    "incompatible": Option(bool, False, "use u_1 = 0 instead of compatible data"),
    "out": Option(str, None, "output file (default: stdout)"),
}


def _coerce(key: str, value):
    opt = SCHEMA[key]
    if value is None:
        return None
    if opt.type is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false")
        return value
    if opt.type is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not float(value).is_integer():
            raise ConfigError(f"{key} must be an integer")
        return int(value)
    if opt.type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number")
        return float(value)
    return str(value)


def load_file(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def resolve(file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, file values and non-``None`` overrides."""
    file_values = file_values or {}
    unknown = sorted(set(file_values) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {k: o.default for k, o in SCHEMA.items()}
    for k, v in file_values.items():
        cfg[k] = _coerce(k, v)
    for k, v in (overrides or {}).items():
        if k in SCHEMA and v is not None:
            cfg[k] = _coerce(k, v)
    return cfg
