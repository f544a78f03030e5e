"""Structured norm reports and reproducibility metadata."""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def git_revision(path: str | Path | None = None) -> str:
    cwd = Path(path) if path else Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], cwd=cwd, capture_output=True, text=True, timeout=5, check=False
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    rev = out.stdout.strip()
    return rev if out.returncode == 0 and rev else "unknown"


@dataclass
class NormReport:
    """``{norm_name, value, shell_table, pair_table, metadata}``."""

    norm_name: str
    value: float
    shell_table: dict = field(default_factory=dict)
    pair_table: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "norm_name": self.norm_name,
                "value": self.value,
                "shell_table": self.shell_table,
                "pair_table": self.pair_table,
                "metadata": self.metadata,
            }
        )

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "NormReport":
        d = json.loads(text)
        return cls(d["norm_name"], d["value"], d["shell_table"], d["pair_table"], d["metadata"])

    def with_metadata(self, **kw) -> "NormReport":
        md = dict(self.metadata)
        md.update(kw)
        return NormReport(self.norm_name, self.value, self.shell_table, self.pair_table, md)
