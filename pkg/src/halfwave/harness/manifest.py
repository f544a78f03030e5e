"""Reproducibility manifest and plot-ready CSV output."""

from __future__ import annotations

import json
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from ..report import canonical_json, config_hash, git_revision

RNG_NAME = "numpy.random.Philox"
# keys that only say where output goes; they do not change any result
_LOCATION_KEYS = ("out", "report", "snapshot", "input", "config")


def build_manifest(command: str, config: dict) -> dict:
    """Config, its hash, seed, generator, versions and revision. No timestamps."""
    cfg = {k: v for k, v in sorted(config.items()) if k not in _LOCATION_KEYS}
    return {
        "command": command,
        "config": cfg,
        "config_hash": config_hash({"command": command, "config": cfg}),
        "seed": cfg.get("seed"),
        "rng": RNG_NAME,
        "versions": {
            "halfwave": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "git_rev": git_revision(),
    }


def _fmt(x) -> str:
    return repr(float(x))


def csv_text(columns: dict, manifest: dict) -> str:
    """``# manifest: {...}`` then a header row and one row per sample."""
    names = list(columns)
    rows = zip(*(np.asarray(columns[k]).reshape(-1) for k in names))
    lines = ["# manifest: " + canonical_json(manifest), ",".join(names)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def read_csv(path: str | Path) -> tuple:
    """Inverse of :func:`csv_text`: ``(manifest, columns)``."""
    manifest, header, rows = None, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# manifest: "):
            manifest = json.loads(line[len("# manifest: ") :])
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows).reshape(-1, len(header)) if header else np.zeros((0, 0))
    return manifest, {k: data[:, i] for i, k in enumerate(header or [])}


def emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
