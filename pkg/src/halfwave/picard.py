"""Outer/inner Picard iteration for the wave formulation.

``u^(0) = p``. ``u^(1)`` is the wave-maps solve (first source group
only). For ``j >= 2`` the nonlocal groups are frozen at ``u^(j-1)`` and
projected onto the tangent plane of the current sub-iterate. Every
sub-iteration starts from the free wave with the fixed data ``u[0]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, NoContraction
from .evolve import solve_linear_wave
from .model import WaveState, _project, dot, nonlocal_pieces, wave_maps_term, waveform_rhs_array
from .spacetime import TrajectorySlab, s_norm_proxy, time_derivative
from .spectral_grid import CFL_FACTOR, GridSpec

STALL_LIMIT = 3


def h2_proxy_distance(grid: GridSpec, a: tuple, b: tuple) -> float:
    """``sup_t ( ||du||_{H^2} + ||du_t||_{H^1} )`` with inhomogeneous weights."""
    du = grid.fft(a[0] - b[0])
    dut = grid.fft(a[1] - b[1])
    k2 = grid.power_symbol(1.0)
    w2 = (1.0 + k2)[None, None]
    w1 = np.sqrt(1.0 + k2)[None, None]
    axes = tuple(range(1, du.ndim))
    nu = np.sqrt(grid.volume * (np.abs(w2 * du) ** 2).sum(axis=axes))
    nut = np.sqrt(grid.volume * (np.abs(w1 * dut) ** 2).sum(axis=axes))
    return float((nu + nut).max())


@dataclass
class IterationTrace:
    """Per-(j, i) records ``{diff_h2, diff_snorm, residual, constraint_max}``."""

    entries: list = field(default_factory=list)
    outer: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, j: int, i: int, diff_h2: float, constraint_max: float):
        self.entries.append(
            {"j": j, "i": i, "diff_h2": diff_h2, "diff_snorm": None, "residual": None, "constraint_max": constraint_max}
        )

    def sub_diffs(self, j: int) -> list:
        return [e["diff_h2"] for e in self.entries if e["j"] == j]

    def outer_diffs(self) -> list:
        return [o["diff_h2"] for o in self.outer]

    def outer_ratios(self) -> list:
        d = self.outer_diffs()
        return [d[i + 1] / d[i] if d[i] > 0 else 0.0 for i in range(len(d) - 1)]

    def all_zero(self) -> bool:
        vals = [e["diff_h2"] for e in self.entries] + [o["diff_h2"] for o in self.outer]
        vals += [o["residual"] or 0.0 for o in self.outer] + [o["diff_snorm"] or 0.0 for o in self.outer]
        return all(v == 0.0 for v in vals)

    def to_dict(self) -> dict:
        return {"entries": self.entries, "outer": self.outer, "metadata": self.metadata}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def power_of_two_steps(T: float, dt: float) -> tuple:
    """``2^m - 1`` steps (``2^m`` frames) with step size at most ``dt``."""
    m = max(2, math.ceil(math.log2(T / dt + 1.0) - 1e-12))
    n = 2**m - 1
    return n, T / n


def _constraint_max(u: np.ndarray) -> float:
    """Max deviation over a stack of frames ``(M+1, 3, ...)``."""
    return float(np.abs((u * u).sum(axis=1) - 1.0).max())


def picard_solve(
    data: WaveState,
    grid: GridSpec | None = None,
    j_max: int = 6,
    i_max: int = 8,
    tol: float = 1e-10,
    T: float | None = None,
    dt: float | None = None,
    dealias: bool = True,
    project: bool = True,
    snorm: bool = True,
):
    """Run the iteration and return ``(slab, trace)``.

    The linear solves use the exact per-mode propagator with the source
    sampled at every frame. ``project=False`` drops the tangent projection
    of the frozen groups, which breaks constraint propagation (negative
    control). Raises :class:`NoContraction` when a sub-iteration's
    difference norm fails to decrease three times in a row.
    """
    grid = grid or data.grid
    T = grid.t_end if T is None else T
    n, h = power_of_two_steps(T, grid.dt if dt is None else dt)
    if h > CFL_FACTOR * grid.dx * (1 + 1e-12):
        raise GridError("time step violates the CFL bound")
    times = h * np.arange(n + 1)
    u0, u1 = data.u.samples, data.ut.samples
    p = data.u.base_point
    frames_shape = (n + 1,) + u0.shape
    zero_src = np.zeros(frames_shape)
    free = solve_linear_wave(grid, u0, u1, zero_src, h)

    def g1(w):
        return np.array([grid.dealias(s) if dealias else s for s in (wave_maps_term(grid, a, b) for a, b in zip(*w))])

    trace = IterationTrace(
        metadata={"grid": grid.describe(), "n_steps": n, "dt": h, "T": T, "tol": tol, "project": project}
    )
    prev = (np.broadcast_to(p.reshape((3,) + (1,) * grid.dim), frames_shape).copy(), np.zeros(frames_shape))

    for j in range(1, j_max + 1):
        if j >= 2:
            frozen = []
            for a in prev[0]:
                lu, s, g3 = nonlocal_pieces(grid, a)
                frozen.append(lu * s[None] + g3)
            frozen = np.array(frozen)
        w = free
        stalls = 0
        last = math.inf
        for i in range(1, i_max + 1):
            src = g1(w)
            if j >= 2:
                extra = np.array([_project(a, f) if project else f for a, f in zip(w[0], frozen)])
                if dealias:
                    extra = np.array([grid.dealias(x) for x in extra])
                src = src + extra
            new = solve_linear_wave(grid, u0, u1, src, h)
            d = h2_proxy_distance(grid, new, w)
            w = new
            trace.add(j, i, d, _constraint_max(w[0]))
            if d < tol:
                break
            stalls = stalls + 1 if d >= last else 0
            last = d
            if stalls >= STALL_LIMIT:
                raise NoContraction(f"sub-iteration j={j} stalled at i={i}", trace)
        dj = h2_proxy_distance(grid, w, prev)
        rec = {
            "j": j,
            "diff_h2": dj,
            "diff_snorm": None,
            "residual": iterate_residual(grid, w, h, dealias, u0, u1),
            "constraint_max": _constraint_max(w[0]),
            "sub_iterations": i,
        }
        if snorm:
            diff = TrajectorySlab(grid, times, w[0] - prev[0])
            rec["diff_snorm"] = s_norm_proxy(diff).value if np.any(diff.frames) else 0.0
        trace.outer.append(rec)
        prev = w
        if dj < tol:
            break
    slab = TrajectorySlab(grid, times, prev[0], rates=prev[1])
    return slab, trace


def iterate_residual(grid: GridSpec, w: tuple, h: float, dealias: bool, u0=None, u1=None) -> float:
    """Distance between ``w`` and the linear solve sourced by the full right-hand side at ``w``."""
    u0 = w[0][0] if u0 is None else u0
    u1 = w[1][0] if u1 is None else u1
    src = np.array([waveform_rhs_array(grid, a, b, dealias) for a, b in zip(*w)])
    return h2_proxy_distance(grid, solve_linear_wave(grid, u0, u1, src, h), w)


def constraint_identity_residual(iterate: TrajectorySlab) -> dict:
    """Per-frame ``L^2`` residual of ``Box(|u|^2 - 1) = 2(|u|^2 - 1)(|grad u|^2 - |u_t|^2)``.

    ``d_t^2 |u|^2`` is obtained by fourth-order differencing of ``2 u . u_t``.
    """
    if iterate.rates is None:
        raise ValueError("the iterate must carry time derivatives (rates)")
    grid = iterate.grid
    u, ut = iterate.frames, iterate.rates
    phi = (u * u).sum(axis=1) - 1.0
    phi_tt = time_derivative(2.0 * (u * ut).sum(axis=1)[:, None], iterate.frame_dt)[:, 0]
    res = []
    for i in range(iterate.n_frames):
        g = grid.grad(u[i])
        null = (g * g).sum(axis=(0, 1)) - (ut[i] * ut[i]).sum(axis=0)
        box = phi_tt[i] - grid.lap(phi[i][None])[0]
        res.append(grid.l2_norm(box - 2.0 * phi[i] * null))
    return {
        "t": iterate.times.copy(),
        "residual": np.array(res),
        "constraint_max": np.abs(phi).reshape(iterate.n_frames, -1).max(axis=1),
    }
