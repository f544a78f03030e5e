"""Invariant suite behind ``halfwave verify`` and the acceptance tests.

Every criterion is a function ``criterion_<n>(quick, seed)`` returning a
list of :class:`Check` records. The report is deterministic: it holds no
timings or timestamps, and all randomness comes from Philox streams
seeded from ``seed``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import oracles
from ..bilinear import apply_bilinear, apply_via_expansion, expand_symbol, gain_regression, get_symbol, random_shell_field
from ..dyadic import DyadicRange, bernstein_ratio, lp_decompose, paradiff_residual
from ..evolve import equivalence_report, integrate_halfwave
from ..model import BumpProfile, SphereField, energy_array, make_initial_data
from ..picard import constraint_identity_residual, picard_solve
from ..spacetime import AdmissiblePair, is_admissible
from ..spectral_grid import (
    GridSpec,
    RealField,
    fractional_laplacian,
    gradient,
    riesz_composition,
    riesz_transform,
)


@dataclass
class Check:
    """One measured quantity compared against its threshold."""

    criterion: int
    name: str
    value: float
    threshold: float
    relation: str
    passed: bool = field(init=False)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        v, t = self.value, self.threshold
        ok = {
            "<=": lambda: v <= t,
            ">=": lambda: v >= t,
            ">": lambda: v > t,
            "==": lambda: v == t,
        }[self.relation]
        self.passed = bool(np.isfinite(v) and ok()) if self.relation != "==" else bool(ok())

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.criterion} {self.name}: {self.value:.3e} {self.relation} {self.threshold:.3e}"

    def to_dict(self) -> dict:
        return asdict(self)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[stream, 0, 0, 0]))


def _random_field(grid: GridSpec, rng: np.random.Generator, components: int = 1) -> RealField:
    return RealField(grid, rng.standard_normal((components,) + grid.shape))


def band_limited_field(grid: GridSpec, coeffs: np.ndarray) -> RealField:
    """Real trigonometric polynomial with integer modes ``|m_i| <= B``.

    ``coeffs`` has shape ``(2B+1,)*dim`` indexed by ``m + B``. The same
    coefficients on a finer grid give the same function, sampled finer.
    """
    B = (coeffs.shape[0] - 1) // 2
    if 2 * B >= grid.n // 2:
        raise ValueError("band limit must stay below the Nyquist frequency")
    full = np.zeros(grid.shape, dtype=complex)
    idx = np.arange(-B, B + 1) % grid.n
    full[np.ix_(*([idx] * grid.dim))] = coeffs
    return RealField(grid, np.real(grid.ifft(full))[None])


# -- criterion 1: spectral oracles ----------------------------------------------


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def criterion_1(quick: bool = True, seed: int = 0) -> list:
    worst = {"fractional_laplacian": 0.0, "riesz": 0.0, "gradient": 0.0}
    cases = []
    rng = _rng(seed, 1)
    for dim, n in ((1, 16), (1, 64), (2, 16), (2, 32)):
        grid = GridSpec(dim, n, box_length=2.0 * np.pi * 1.5)
        f = _random_field(grid, rng)
        xi = oracles.lattice_frequencies(n, grid.L, dim)
        kmag = np.sqrt(sum(x * x for x in xi))
        inv = np.divide(1.0, kmag, out=np.zeros_like(kmag), where=kmag > 0)
        a = f.samples[0]
        for s in (0.25, 0.5, 1.0):
            ref = oracles.dense_multiplier(kmag ** (2 * s), a, dim)
            worst["fractional_laplacian"] = max(worst["fractional_laplacian"], _rel(fractional_laplacian(s, f).samples[0], ref))
        for j in range(dim):
            ref = oracles.dense_multiplier(1j * xi[j] * inv, a, dim)
            worst["riesz"] = max(worst["riesz"], _rel(riesz_transform(j, f).samples[0], ref))
            ref = oracles.dense_multiplier(1j * xi[j], a, dim)
            worst["gradient"] = max(worst["gradient"], _rel(gradient(f)[j].samples[0], ref))
        cases.append({"dim": dim, "n": n})
    return [Check(1, f"{k} vs dense DFT", v, 1e-12, "<=", {"cases": cases}) for k, v in worst.items()]


# -- criterion 2: definition consistency ------------------------------------------


def criterion_2(quick: bool = True, seed: int = 0) -> list:
    rng = _rng(seed, 2)
    worst = 0.0
    for i in range(50):
        dim = 1 + i % 2
        grid = GridSpec(dim, 64 if dim == 1 else 32, box_length=2.0 * np.pi * (1 + i % 3))
        f = _random_field(grid, rng)
        worst = max(worst, _rel(fractional_laplacian(0.5, f).samples, riesz_composition(f).samples))
    return [Check(2, "(-Lap)^(1/2) vs Riesz composition, 50 fields", worst, 1e-12, "<=")]


# -- criterion 3: partition and paradifferential identity --------------------------


def _sphere_fields(seed: int) -> list:
    out = []
    for dim, n in ((1, 256), (2, 64)):
        grid = GridSpec(dim, n)
        out.append(make_initial_data(BumpProfile(epsilon=0.1, direction_seed=seed), None, grid).u)
        rng = _rng(seed, 30 + dim)
        w = np.array([0.0, 0.0, 1.0]).reshape((3,) + (1,) * dim) + 0.3 * rng.standard_normal((3,) + grid.shape)
        out.append(SphereField(RealField(grid, w / np.sqrt((w * w).sum(axis=0))), (0.0, 0.0, 1.0)))
    return out


def _paradiff_max(u, check: bool = True) -> tuple:
    drange = DyadicRange.for_grid(u.grid if hasattr(u, "grid") else u.base.grid)
    worst, pairs = 0.0, 0
    for k in drange.shells():
        for m in range(k + 3, drange.k_max + 1):
            worst = max(worst, paradiff_residual(m, k, u, check_constraint=check))
            pairs += 1
    return worst, pairs


def criterion_3(quick: bool = True, seed: int = 0) -> list:
    rng = _rng(seed, 3)
    part = 0.0
    for dim, n in ((1, 64), (2, 32), (1, 256)):
        grid = GridSpec(dim, n, box_length=2.0 * np.pi * 2)
        f = RealField(grid, rng.standard_normal((3,) + grid.shape) + 0.7)
        total = sum(p.samples for p in lp_decompose(f).values()) + f.mean().reshape((3,) + (1,) * dim)
        part = max(part, _rel(total, f.samples))
    fields = _sphere_fields(seed)
    worst, pairs = 0.0, 0
    for u in fields:
        w, c = _paradiff_max(u)
        worst, pairs = max(worst, w), pairs + c
    # |u|^2 = 1 + 1e-3 cos(4 x_1): the identity is off by P_m of the defect
    u = fields[0]
    grid = u.grid
    delta = 1e-3 * np.cos(4.0 * grid.coords[0])
    bad = RealField(grid, u.samples * np.sqrt(1.0 + delta)[None])
    ctrl, _ = _paradiff_max(bad, check=False)
    return [
        Check(3, "sum_k P_k f + mean = f", part, 1e-12, "<="),
        Check(3, "paradiff residual on sphere fields", worst, 1e-10, "<=", {"fields": len(fields), "pairs": pairs}),
        Check(3, "paradiff residual, non-unit control", ctrl, 1e-4, ">="),
    ]


# -- criterion 4: admissibility -------------------------------------------------------


def criterion_4(quick: bool = True, seed: int = 0) -> list:
    ok = is_admissible(2, math.inf, 4) and AdmissiblePair(2, math.inf).admissible(4)
    rejected = not is_admissible(2, 4, 4) and not AdmissiblePair(2, 4).admissible(4)
    return [
        Check(4, "(2,inf) admissible in n=4", float(ok), 1.0, "=="),
        Check(4, "(2,4) rejected in n=4", float(rejected), 1.0, "=="),
    ]


# -- criterion 5: conservation and order ----------------------------------------------


def criterion_5(quick: bool = True, seed: int = 0) -> list:
    grid = GridSpec(1, 256)
    u0 = make_initial_data(BumpProfile(epsilon=0.1, direction_seed=seed), None, grid).u
    slab = integrate_halfwave(u0, T=1.0, dt=1e-3, renormalize=True, save_stride=10)
    e = slab.diagnostics["energy"]
    drift = float(np.abs(e - e[0]).max() / e[0])
    cons = float(slab.diagnostics["constraint_max"].max())
    ref = integrate_halfwave(u0, T=1.0, dt=0.01 / 16, save_stride=10**9, diagnostics=False).frames[-1]
    dts = (0.01, 0.005, 0.0025)
    errs = [
        float(np.abs(integrate_halfwave(u0, T=1.0, dt=h, save_stride=10**9, diagnostics=False).frames[-1] - ref).max())
        for h in dts
    ]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    return [
        Check(5, "relative energy drift, T=1", drift, 1e-6, "<="),
        Check(5, "constraint drift (renormalized)", cons, 1e-12, "<="),
        Check(5, "RK4 order under dt refinement", min(orders), 3.5, ">=", {"dt": list(dts), "errors": errs, "orders": orders}),
    ]


# -- criterion 6: equivalence experiment ----------------------------------------------


def criterion_6(quick: bool = True, seed: int = 0) -> list:
    T = 0.5 if quick else 1.0
    prof = BumpProfile(epsilon=0.1, direction_seed=seed)
    fine = GridSpec(1, 256)
    coarse = GridSpec(1, 128)
    data = make_initial_data(prof, None, fine)
    r_coarse_dt = equivalence_report(data, fine, T=T, dt=2e-3, control=False, compare_halfwave=False)
    r_fine = equivalence_report(data, fine, T=T, dt=1e-3)
    r_joint = equivalence_report(make_initial_data(prof, None, coarse), coarse, T=T, dt=2e-3, control=False)
    s1, s2 = r_coarse_dt.metadata["sup_x_energy"], r_fine.metadata["sup_x_energy"]
    shrink = s1 / s2 if s2 > 0 else math.inf
    ctrl = r_fine.metadata["control"]
    d1, d2 = r_joint.metadata["halfwave_sup_distance"], r_fine.metadata["halfwave_sup_distance"]
    return [
        Check(6, "sup X energy below floor (dt=1e-3)", s2, r_fine.metadata["floor"], "<=", {"T": T}),
        Check(6, "floor shrink under dt -> dt/2", shrink, 4.0, ">=", {"sup_x_energy": [s1, s2]}),
        Check(6, "incompatible control X(0)", ctrl["x_energy_initial"], 0.0, ">"),
        Check(6, "incompatible control persistence min X / X(0)", ctrl["persistence"], 0.5, ">="),
        Check(6, "half-wave vs wave-form distance drop, joint refinement", d1 / d2 if d2 > 0 else math.inf, 2.0, ">=",
              {"distances": [d1, d2], "grids": [128, 256], "dt": [2e-3, 1e-3]}),
    ]


# -- criterion 7: Picard contraction --------------------------------------------------


def criterion_7(quick: bool = True, seed: int = 0) -> list:
    grid = GridSpec(1, 128)
    tol = 1e-10
    data = make_initial_data(BumpProfile(epsilon=0.05, direction_seed=seed), None, grid)
    slab, trace = picard_solve(data, grid, tol=tol, T=0.5)
    ratios = trace.outer_ratios()
    ident = constraint_identity_residual(slab)
    zero = make_initial_data(BumpProfile(epsilon=0.0), None, grid)
    _, ztrace = picard_solve(zero, grid, tol=tol, T=0.5)
    return [
        Check(7, "max outer difference ratio", max(ratios) if ratios else math.inf, 0.5, "<=",
              {"outer_diffs": trace.outer_diffs(), "ratios": ratios}),
        Check(7, "converged residual / tol", trace.outer[-1]["residual"] / tol, 10.0, "<="),
        Check(7, "constraint identity residual", float(ident["residual"].max()), 1e-6, "<="),
        Check(7, "sup | |u|^2 - 1 |", float(ident["constraint_max"].max()), 1e-6, "<="),
        Check(7, "epsilon = 0 trace is all zeros", float(ztrace.all_zero()), 1.0, "=="),
    ]


# -- criterion 8: bilinear expansion ---------------------------------------------------


def criterion_8(quick: bool = True, seed: int = 0) -> list:
    rng = _rng(seed, 8)
    grid = GridSpec(1, 64, box_length=2.0 * np.pi * 16)
    k1, k2, M = -4, 0, 8
    checks = []
    for name in ("sqrt_commutator", "sqrt_lap_commutator"):
        sym = get_symbol(name, k1, k2)
        exp = expand_symbol(sym, M)
        u = random_shell_field(grid, k1, rng)
        v = random_shell_field(grid, k2, rng)
        direct = apply_bilinear(sym, u, v).samples
        err = _rel(apply_via_expansion(exp, u, v).samples, direct)
        checks.append(Check(8, f"{name}: expansion vs direct, M=8", err, 1e-6, "<="))
        checks.append(Check(8, f"{name}: coefficient decay slope", exp.decay_slope, -4.0, "<=",
                            {"tail_slope": exp.tail_slope}))
        checks.append(Check(8, f"{name}: sup |a_mp| / 2^k1 at least 0.1", exp.sup_coefficient / 2.0**k1, 0.1, ">="))
        checks.append(Check(8, f"{name}: sup |a_mp| / 2^k1 at most 10", exp.sup_coefficient / 2.0**k1, 10.0, "<="))
    reg = gain_regression(samples=10 if quick else 20, seed=seed)
    checks.append(Check(8, "commutator gain slope deviation |slope - 1|", abs(reg["slope"] - 1.0), 0.2, "<=",
                        {"slope": reg["slope"], "k1": reg["k1"], "log2_max_ratio": reg["log2_max_ratio"]}))
    return checks


# -- criterion 9: Bernstein ensemble ---------------------------------------------------

BERNSTEIN_PAIRS = ((2.0, math.inf), (2.0, 4.0), (1.0, 2.0))


def bernstein_ensemble(dim: int, n: int, k: int, band: int, fields: int, seed: int) -> dict:
    """Ensemble-max ratios on grids ``n`` and ``2n`` for the same functions."""
    rng = _rng(seed, 90 + dim)
    coarse, fine = GridSpec(dim, n), GridSpec(dim, 2 * n)
    best = {pq: [0.0, 0.0] for pq in BERNSTEIN_PAIRS}
    for _ in range(fields):
        shape = (2 * band + 1,) * dim
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        for gi, grid in enumerate((coarse, fine)):
            f = band_limited_field(grid, c)
            for pq in BERNSTEIN_PAIRS:
                best[pq][gi] = max(best[pq][gi], bernstein_ratio(k, pq[0], pq[1], f))
    return best


def criterion_9(quick: bool = True, seed: int = 0) -> list:
    checks = []
    for dim, n, k, band in ((1, 64, 3, 14), (2, 32, 2, 7)):
        best = bernstein_ensemble(dim, n, k, band, 100, seed)
        for (p, q), (a, b) in best.items():
            change = abs(b / a - 1.0) if a > 0 and np.isfinite(a) else math.inf
            label = f"dim {dim} ({p:g},{q:g}): |max ratio(2N)/max ratio(N) - 1|"
            checks.append(Check(9, label, change, 0.2, "<=", {"max_ratio": [a, b], "N": [n, 2 * n], "k": k}))
    return checks


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 10)}


def run_suite(quick: bool = True, seed: int = 0, criteria=None) -> list:
    checks = []
    for i in criteria or sorted(CRITERIA):
        checks.extend(CRITERIA[i](quick=quick, seed=seed))
    return checks


def suite_report(checks: list, manifest: dict) -> dict:
    failed = [c for c in checks if not c.passed]
    return {
        "manifest": manifest,
        "checks": [c.to_dict() for c in checks],
        "summary": {"total": len(checks), "failed": len(failed), "all_passed": not failed},
    }
