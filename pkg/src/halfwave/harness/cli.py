"""``halfwave`` command line.

Exit codes: 0 success, 1 invariant or check failure, 2 usage error.
Every subcommand accepts ``--config FILE`` (flat JSON, see
:mod:`halfwave.harness.config`); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from ..bilinear import SYMBOLS, expand_symbol, get_symbol
from ..dyadic import besov_report, lebesgue_norm, sobolev_norm
from ..errors import HalfWaveError
from ..evolve import equivalence_report, integrate_halfwave, integrate_waveform
from ..model import BumpProfile, incompatible_data, make_initial_data, waveform_rhs_array
from ..picard import picard_solve, power_of_two_steps
from ..report import NormReport, canonical_json
from ..spacetime import n_norm_upper, s_norm_proxy, xsb_norm
from ..spectral_grid import GridSpec, RealField
from . import config as cfgmod
from . import snapshot_io
from .manifest import build_manifest, csv_text, emit
from .verify import run_suite, suite_report

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

_GRID_KEYS = ("dim", "n", "L", "dt", "T")
_DATA_KEYS = ("epsilon", "seed", "radius")
_COMMANDS = {
    "simulate": _GRID_KEYS + _DATA_KEYS + ("renormalize", "save_stride"),
    "waveform": _GRID_KEYS + _DATA_KEYS + ("save_stride", "incompatible"),
    "equivalence": _GRID_KEYS + _DATA_KEYS + ("save_stride", "floor"),
    "picard": _GRID_KEYS + _DATA_KEYS + ("j_max", "i_max", "tol"),
    "norms": _GRID_KEYS + _DATA_KEYS,
    "verify": ("seed",),
    "expand-symbol": ("symbol", "k1", "k2", "M", "dim"),
}


class UsageError(Exception):
    pass


def _add_option(p: argparse.ArgumentParser, key: str):
    opt = cfgmod.SCHEMA[key]
    flag = "--" + key.replace("_", "-")
    if opt.type is bool:
        p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None, help=opt.help)
    elif key == "symbol":
        p.add_argument(flag, dest=key, choices=sorted(SYMBOLS), default=None, help=opt.help)
    else:
        p.add_argument(flag, dest=key, type=opt.type, default=None, help=f"{opt.help} (default {opt.default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halfwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate the half-wave flow; CSV time series",
        "waveform": "integrate the second-order wave form; CSV time series",
        "equivalence": "X-energy experiment with incompatible control; CSV and verdict",
        "picard": "Picard iteration for the wave form; JSON iteration trace",
        "norms": "spatial norms of a snapshot, or space-time norms of a simulated slab",
        "verify": "run the invariant suite; exit 1 if any check fails",
        "expand-symbol": "Fourier coefficients of a bilinear symbol; CSV table",
    }
    for name, keys in _COMMANDS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--out", help="output file (default: stdout)")
        for k in keys:
            _add_option(p, k)
        if name in ("simulate", "waveform"):
            p.add_argument("--snapshot", help="write the final state as an HWM1 snapshot")
        if name == "waveform":
            p.add_argument("--renorm-policy", choices=("none", "project"), default="none")
        if name == "equivalence":
            p.add_argument("--report", help="write the full JSON report here")
        if name == "norms":
            p.add_argument("--input", help="HWM1 snapshot to analyse")
            p.add_argument("--base-point", default="0,0,1", help="subtracted from 3-component snapshots")
            p.add_argument("--slab", action="store_true", help="simulate a half-wave slab and report space-time norms")
        if name == "verify":
            p.add_argument("--quick", action="store_true", help="shorter horizons and ensembles, same tolerances")
            p.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,5")
    return parser


def _config(args: argparse.Namespace) -> dict:
    """Resolved settings for this subcommand; file keys used by other commands are ignored."""
    file_values = cfgmod.load_file(args.config) if args.config else {}
    allowed = set(_COMMANDS[args.command]) | {"out"}
    cfg = cfgmod.resolve(file_values, {k: getattr(args, k, None) for k in allowed})
    args.out = cfg["out"]
    return {k: cfg[k] for k in sorted(allowed)}


def _grid(cfg: dict) -> GridSpec:
    return GridSpec(cfg["dim"], cfg["n"], box_length=cfg["L"], dt=cfg["dt"], t_end=cfg["T"])


def _data(cfg: dict, grid: GridSpec):
    prof = BumpProfile(radius=cfg["radius"], direction_seed=cfg["seed"], epsilon=cfg["epsilon"])
    return make_initial_data(prof, None, grid)


def _write_snapshot(path, grid, t, samples, manifest):
    snap = snapshot_io.Snapshot(grid.dim, grid.n, grid.L, float(t), samples)
    snapshot_io.write(path, snap, manifest)


def _series(slab) -> dict:
    return {k: slab.diagnostics[k] for k in ("t", "energy", "x_energy", "constraint_max", "besov2")}


def cmd_simulate(args, cfg) -> int:
    grid = _grid(cfg)
    state = _data(cfg, grid)
    slab = integrate_halfwave(state.u, T=cfg["T"], renormalize=cfg["renormalize"], save_stride=cfg["save_stride"])
    man = build_manifest("simulate", cfg)
    emit(csv_text(_series(slab), man), args.out)
    if args.snapshot:
        _write_snapshot(args.snapshot, grid, slab.times[-1], slab.frames[-1], man)
    return EXIT_OK


def cmd_waveform(args, cfg) -> int:
    grid = _grid(cfg)
    state = _data(cfg, grid)
    if cfg["incompatible"]:
        state = incompatible_data(state)
    slab = integrate_waveform(state, grid, args.renorm_policy, T=cfg["T"], save_stride=cfg["save_stride"])
    man = build_manifest("waveform", dict(cfg, renorm_policy=args.renorm_policy))
    emit(csv_text(_series(slab), man), args.out)
    if args.snapshot:
        _write_snapshot(args.snapshot, grid, slab.times[-1], slab.frames[-1], man)
    return EXIT_OK


def cmd_equivalence(args, cfg) -> int:
    grid = _grid(cfg)
    rep = equivalence_report(_data(cfg, grid), grid, T=cfg["T"], floor=cfg["floor"], save_stride=cfg["save_stride"])
    man = build_manifest("equivalence", cfg)
    cols = {k: rep.shell_table[k] for k in ("t", "x_energy", "control_x_energy", "constraint_max", "energy")}
    emit(csv_text(cols, man), args.out)
    rep = rep.with_metadata(manifest=man)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(rep.to_json() + "\n")
    md = rep.metadata
    print(
        f"verdict {md['verdict']}: sup X energy {md['sup_x_energy']:.3e} (floor {md['floor']:.1e}),"
        f" control X(0) {md['control']['x_energy_initial']:.3e}",
        file=sys.stderr if not args.out else sys.stdout,
    )
    return EXIT_OK if md["verdict"] == "PASS" else EXIT_FAILURE


def cmd_picard(args, cfg) -> int:
    grid = _grid(cfg)
    _, trace = picard_solve(_data(cfg, grid), grid, j_max=cfg["j_max"], i_max=cfg["i_max"], tol=cfg["tol"], T=cfg["T"])
    trace.metadata["manifest"] = build_manifest("picard", cfg)
    emit(canonical_json(trace.to_dict()) + "\n", args.out)
    converged = bool(trace.outer) and trace.outer[-1]["diff_h2"] < cfg["tol"]
    return EXIT_OK if converged else EXIT_FAILURE


def _spatial_norms(f: RealField) -> dict:
    g = f.grid
    rep = besov_report(2.0, f)
    return {
        "L2": g.l2_norm(f.samples),
        "Linf": lebesgue_norm(g, f.samples, math.inf),
        "H1": sobolev_norm(1.0, f),
        "H2": sobolev_norm(2.0, f),
        "besov2_sobolev": rep.sobolev_sum,
        "besov2_dyadic": rep.dyadic_sum,
        "shells": rep.shell_values,
    }


def cmd_norms(args, cfg) -> int:
    if args.slab:
        grid = _grid(cfg)
        state = _data(cfg, grid)
        n, h = power_of_two_steps(cfg["T"], grid.dt)
        slab = integrate_halfwave(state.u, T=cfg["T"], dt=h, diagnostics=False)
        p = state.u.base_point.reshape((1, 3) + (1,) * grid.dim)
        rel = slab.with_frames(slab.frames - p)
        src = rel.with_frames(np.array([waveform_rhs_array(grid, a, b) for a, b in zip(slab.frames, slab.rates)]))
        s = s_norm_proxy(rel)
        values = {
            "s_norm_proxy": s.value,
            "xsb_sup_2_half": xsb_norm("sup", 2.0, 0.5, rel),
            "n_norm_upper": n_norm_upper(src),
            "frames": slab.n_frames,
        }
        rep = NormReport("slab_norms", s.value, s.shell_table, s.pair_table, dict(values, **s.metadata))
    else:
        if not args.input:
            raise UsageError("norms needs --input SNAPSHOT or --slab")
        snap = snapshot_io.read(args.input)
        grid = GridSpec(snap.dim, snap.n, box_length=snap.L)
        a = snap.samples
        if snap.components == 3:
            try:
                bp = np.array([float(x) for x in args.base_point.split(",")])
            except ValueError as exc:
                raise UsageError(f"bad --base-point {args.base_point!r}") from exc
            if bp.size != 3:
                raise UsageError("--base-point needs three components")
            a = a - bp.reshape((3,) + (1,) * snap.dim)
        values = _spatial_norms(RealField(grid, a))
        rep = NormReport("snapshot_norms", values["besov2_sobolev"], values.pop("shells"), {}, dict(values, t=snap.t))
    rep = rep.with_metadata(manifest=build_manifest("norms", cfg))
    emit(rep.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    crit = None
    if args.criteria:
        try:
            crit = [int(c) for c in args.criteria.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --criteria {args.criteria!r}") from exc
        if any(c not in range(1, 10) for c in crit):
            raise UsageError("criteria are numbered 1..9")
    checks = run_suite(quick=args.quick, seed=cfg["seed"], criteria=crit)
    for c in checks:
        print(c.line())
    man = build_manifest("verify", dict(cfg, quick=args.quick, criteria=crit))
    report = suite_report(checks, man)
    text = json.dumps(json.loads(canonical_json(report)), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    s = report["summary"]
    print(f"{s['total'] - s['failed']}/{s['total']} checks passed")
    return EXIT_OK if s["all_passed"] else EXIT_FAILURE


def cmd_expand_symbol(args, cfg) -> int:
    sym = get_symbol(cfg["symbol"], cfg["k1"], cfg["k2"])
    exp = expand_symbol(sym, cfg["M"], cfg["dim"])
    rows = exp.table()
    n = exp.dim
    cols = {f"m{i}": [r["m"][i] for r in rows] for i in range(n)}
    cols.update({f"p{i}": [r["p"][i] for r in rows] for i in range(n)})
    for k in ("re", "im", "abs"):
        cols[k] = [r[k] for r in rows]
    man = build_manifest("expand-symbol", cfg)
    man["decay_slope"] = exp.decay_slope
    man["tail_slope"] = exp.tail_slope
    emit(csv_text(cols, man), args.out)
    return EXIT_OK


_HANDLERS = {
    "simulate": cmd_simulate,
    "waveform": cmd_waveform,
    "equivalence": cmd_equivalence,
    "picard": cmd_picard,
    "norms": cmd_norms,
    "verify": cmd_verify,
    "expand-symbol": cmd_expand_symbol,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = _config(args)
        return _HANDLERS[args.command](args, cfg)
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"halfwave {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HalfWaveError as exc:
        # invalid parameters are ValueError subclasses (grid, bump size, ...)
        code = EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAILURE
        print(f"halfwave {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
