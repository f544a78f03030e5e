"""Time integration for the half-wave flow and its wave formulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import besov_norm
from .errors import ConstraintViolated, DivergenceError, GridError
from .model import (
    SphereField,
    WaveState,
    constraint_deviation,
    dot,
    energy_array,
    halfwave_rhs_array,
    incompatible_data,
    waveform_rhs_array,
    x_energy_array,
)
from .report import NormReport
from .spacetime import TrajectorySlab
from .spectral_grid import CFL_FACTOR, GridSpec, RealField, SpectralField

HARD_CONSTRAINT_TOL = 1e-3
DIVERGENCE_FACTOR = 1e3
RENORM_POLICIES = ("none", "project")


def _check_dt(grid: GridSpec, dt: float):
    if dt == 0 or not math.isfinite(dt):
        raise GridError("dt must be finite and nonzero")
    if abs(dt) > CFL_FACTOR * grid.dx * (1 + 1e-12):
        raise GridError(f"|dt|={abs(dt):g} violates the CFL bound {CFL_FACTOR * grid.dx:g}")


def _normalize(a: np.ndarray) -> np.ndarray:
    return a / np.sqrt(dot(a, a))[None]


def _steps(T: float, dt: float) -> tuple:
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    return n, T / n


# -- half-wave flow -----------------------------------------------------------


def rk4_halfwave(grid: GridSpec, u: np.ndarray, dt: float, dealias: bool = False) -> np.ndarray:
    f = lambda a: halfwave_rhs_array(grid, a, dealias)
    k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_halfwave(state: SphereField, dt: float, renormalize: bool = False, dealias: bool = False) -> SphereField:
    """One classical Runge-Kutta step of ``u_t = u x L u``; optional pointwise projection."""
    grid = state.grid
    _check_dt(grid, dt)
    u = rk4_halfwave(grid, state.samples, dt, dealias)
    if renormalize:
        u = _normalize(u)
    dev = constraint_deviation(u)
    if dev > HARD_CONSTRAINT_TOL:
        raise ConstraintViolated(dev, HARD_CONSTRAINT_TOL, "step_halfwave")
    tol = max(state.constraint_tol, 1e-12) if renormalize else HARD_CONSTRAINT_TOL
    return SphereField(RealField(grid, u), state.base_point, tol)


def _series_row(grid, t, u, ut, p):
    rel = RealField(grid, u - p.reshape((3,) + (1,) * grid.dim))
    return {
        "t": t,
        "energy": energy_array(grid, u),
        "x_energy": x_energy_array(grid, u, ut),
        "constraint_max": constraint_deviation(u),
        "besov2": besov_norm(2.0, rel) if np.any(rel.samples) else 0.0,
    }


def _collect(rows: list) -> dict:
    return {k: np.array([r[k] for r in rows]) for k in rows[0]} if rows else {}


def integrate_halfwave(
    state: SphereField,
    T: float | None = None,
    dt: float | None = None,
    renormalize: bool = False,
    save_stride: int = 1,
    dealias: bool = False,
    diagnostics: bool = True,
) -> TrajectorySlab:
    """Integrate to time ``T`` (default ``grid.t_end``); frames every ``save_stride`` steps.

    ``dt`` is shrunk slightly if needed so that ``T`` is hit exactly. The
    slab stores ``u_t = u x L u`` as rates and, with ``diagnostics``, the
    CSV time series (t, energy, x_energy, constraint_max, besov2).
    """
    grid = state.grid
    T = grid.t_end if T is None else T
    n, h = _steps(T, grid.dt if dt is None else dt)
    _check_dt(grid, h)
    p = state.base_point
    u = state.samples
    frames, rates, times, rows = [], [], [], []

    def record(i, a):
        r = halfwave_rhs_array(grid, a, dealias)
        frames.append(a)
        rates.append(r)
        times.append(i * h)
        if diagnostics:
            rows.append(_series_row(grid, i * h, a, r, p))

    record(0, u)
    for i in range(1, n + 1):
        u = rk4_halfwave(grid, u, h, dealias)
        if renormalize:
            u = _normalize(u)
        dev = constraint_deviation(u)
        if dev > HARD_CONSTRAINT_TOL:
            raise ConstraintViolated(dev, HARD_CONSTRAINT_TOL, f"integrate_halfwave step {i}")
        if i % save_stride == 0 or i == n:
            record(i, u)
    return TrajectorySlab(
        grid, np.array(times), np.array(frames), rates=np.array(rates), diagnostics=_collect(rows)
    )


# -- linear wave solver -------------------------------------------------------


@dataclass(frozen=True)
class _Propagator:
    cos: np.ndarray
    sinc: np.ndarray  # sin(w dt)/w, dt at w = 0
    wsin: np.ndarray  # w sin(w dt)
    dt: float


_PROPAGATORS: dict = {}


def propagator(grid: GridSpec, dt: float) -> _Propagator:
    key = (grid.dim, grid.n, grid.L, float(dt))
    prop = _PROPAGATORS.get(key)
    if prop is None:
        w = grid.kmag
        cos = np.cos(w * dt)
        sinc = np.where(w > 0, np.sin(w * dt) / np.where(w > 0, w, 1.0), dt)
        prop = _Propagator(cos, sinc, w * np.sin(w * dt), float(dt))
        if len(_PROPAGATORS) > 64:
            _PROPAGATORS.clear()
        _PROPAGATORS[key] = prop
    return prop


def linear_wave_step_coeffs(prop: _Propagator, u: np.ndarray, ut: np.ndarray, F0: np.ndarray, F1: np.ndarray):
    """Exact per-mode propagator plus trapezoidal Duhamel quadrature on coefficients."""
    h = prop.dt
    u_new = prop.cos * u + prop.sinc * ut + 0.5 * h * prop.sinc * F0
    ut_new = -prop.wsin * u + prop.cos * ut + 0.5 * h * (prop.cos * F0 + F1)
    return u_new, ut_new


def linear_wave_step(u_hat: SpectralField, ut_hat: SpectralField, F_hat, dt: float):
    """Advance ``(d_t^2 - Laplacian) u = F`` by ``dt``.

    ``F_hat`` is either one :class:`SpectralField` (source taken constant
    over the step) or a pair with the source at both step endpoints.
    """
    grid = u_hat.grid
    if isinstance(F_hat, SpectralField):
        F0 = F1 = F_hat.coefficients
    else:
        F0, F1 = (F.coefficients for F in F_hat)
    u, ut = linear_wave_step_coeffs(propagator(grid, dt), u_hat.coefficients, ut_hat.coefficients, F0, F1)
    return SpectralField(grid, u), SpectralField(grid, ut)


def solve_linear_wave(grid: GridSpec, u0: np.ndarray, u1: np.ndarray, sources: np.ndarray, h: float):
    """Linear solve with the source sampled at every step endpoint.

    ``sources`` has shape ``(n+1, components, *shape)``; returns frames of
    ``u`` and ``u_t`` at the same instants.
    """
    prop = propagator(grid, h)
    cu, cut = grid.fft(u0), grid.fft(u1)
    fs = grid.fft(sources)
    us = [u0]
    uts = [u1]
    for i in range(sources.shape[0] - 1):
        cu, cut = linear_wave_step_coeffs(prop, cu, cut, fs[i], fs[i + 1])
        us.append(np.real(grid.ifft(cu)))
        uts.append(np.real(grid.ifft(cut)))
    return np.array(us), np.array(uts)


# -- wave formulation ---------------------------------------------------------


def _spatial_sizes(grid: GridSpec, u: np.ndarray, ut: np.ndarray) -> np.ndarray:
    mean = u.reshape(3, -1).mean(axis=1).reshape((3,) + (1,) * grid.dim)
    return np.array([grid.l2_norm(u - mean), grid.l2_norm(ut)])


def integrate_waveform(
    state0: WaveState,
    grid: GridSpec | None = None,
    renorm_policy: str = "none",
    T: float | None = None,
    dt: float | None = None,
    save_stride: int = 1,
    dealias: bool = True,
    sweeps: int = 2,
    diagnostics: bool = True,
) -> TrajectorySlab:
    """Semilinear wave solve with the three-group source.

    Each step predicts the endpoint with the source frozen at the start
    and then runs ``sweeps`` trapezoidal corrector sweeps. ``renorm_policy``
    ``"project"`` maps ``u`` back to the sphere and ``u_t`` to its tangent
    plane after each step. Any tracked size above 1e3 times its initial
    value aborts with :class:`DivergenceError`.
    """
    if renorm_policy not in RENORM_POLICIES:
        raise ValueError(f"renorm_policy must be one of {RENORM_POLICIES}")
    grid = grid or state0.grid
    T = grid.t_end if T is None else T
    n, h = _steps(T, grid.dt if dt is None else dt)
    _check_dt(grid, h)
    prop = propagator(grid, h)
    p = state0.u.base_point
    u = state0.u.samples.copy()
    ut = state0.ut.samples.copy()
    size0 = _spatial_sizes(grid, u, ut)
    rhs = lambda a, b: grid.fft(waveform_rhs_array(grid, a, b, dealias))
    frames, rates, times, rows = [], [], [], []

    def record(i):
        frames.append(u.copy())
        rates.append(ut.copy())
        times.append(i * h)
        if diagnostics:
            rows.append(_series_row(grid, i * h, u, ut, p))

    record(0)
    for i in range(1, n + 1):
        cu, cut = grid.fft(u), grid.fft(ut)
        F0 = rhs(u, ut)
        nu, nut = linear_wave_step_coeffs(prop, cu, cut, F0, F0)
        for _ in range(sweeps):
            F1 = rhs(np.real(grid.ifft(nu)), np.real(grid.ifft(nut)))
            nu, nut = linear_wave_step_coeffs(prop, cu, cut, F0, F1)
        u = np.real(grid.ifft(nu))
        ut = np.real(grid.ifft(nut))
        if renorm_policy == "project":
            u = _normalize(u)
            ut = ut - u * dot(u, ut)[None]
        size = _spatial_sizes(grid, u, ut)
        bad = ~np.isfinite(size) | ((size0 > 0) & (size > DIVERGENCE_FACTOR * size0))
        if np.any(bad) or not np.all(np.isfinite(u)):
            raise DivergenceError(
                f"wave-form integration diverged at t={i * h:g}",
                {"step": i, "t": i * h, "initial_sizes": size0.tolist(), "sizes": size.tolist()},
            )
        if i % save_stride == 0 or i == n:
            record(i)
    slab = TrajectorySlab(grid, np.array(times), np.array(frames), rates=np.array(rates), diagnostics=_collect(rows))
    return slab


# -- equivalence experiment ---------------------------------------------------

DEFAULT_X_FLOOR = 1e-12


def _growth_ratio(t: np.ndarray, e: np.ndarray, floor: float) -> dict:
    """Measured ``(dE/dt)/E`` where ``E`` exceeds the floor."""
    if t.size < 3:
        return {"max": None, "median": None, "count": 0}
    de = np.gradient(e, t)
    mask = e > floor
    if not np.any(mask):
        return {"max": None, "median": None, "count": 0}
    r = de[mask] / e[mask]
    return {"max": float(r.max()), "median": float(np.median(r)), "count": int(mask.sum())}


def equivalence_report(
    data: WaveState,
    grid: GridSpec | None = None,
    T: float | None = None,
    dt: float | None = None,
    floor: float = DEFAULT_X_FLOOR,
    save_stride: int = 10,
    control: bool = True,
    compare_halfwave: bool = True,
) -> NormReport:
    """Run the wave form from compatible data and track ``X``.

    Reports the time series of the X energy, its measured logarithmic
    growth rate, constraint and energy drift, the sup-norm distance to the
    half-wave trajectory, and (with ``control``) the same run from the
    incompatible pair ``(u_0, 0)``.
    """
    grid = grid or data.grid
    slab = integrate_waveform(data, grid, T=T, dt=dt, save_stride=save_stride)
    dg = slab.diagnostics
    e0 = dg["energy"][0]
    shell_table = {
        "t": dg["t"],
        "x_energy": dg["x_energy"],
        "constraint_max": dg["constraint_max"],
        "energy": dg["energy"],
    }
    sup_x = float(dg["x_energy"].max())
    md = {
        "grid": grid.describe(),
        "floor": floor,
        "sup_x_energy": sup_x,
        "x_growth_ratio": _growth_ratio(dg["t"], dg["x_energy"], floor),
        "constraint_drift": float(dg["constraint_max"].max()),
        "energy_drift": float(abs(dg["energy"] - e0).max() / e0) if e0 > 0 else float(abs(dg["energy"]).max()),
        "verdict": "PASS" if sup_x <= floor else "FAIL",
    }
    if compare_halfwave:
        hw = integrate_halfwave(data.u, T=T, dt=dt, save_stride=save_stride, diagnostics=False)
        md["halfwave_sup_distance"] = float(np.abs(hw.frames - slab.frames).max())
    if control:
        bad = integrate_waveform(incompatible_data(data), grid, T=T, dt=dt, save_stride=save_stride)
        xe = bad.diagnostics["x_energy"]
        md["control"] = {
            "x_energy_initial": float(xe[0]),
            "x_energy_final": float(xe[-1]),
            "x_energy_min": float(xe.min()),
            "persistence": float(xe.min() / xe[0]) if xe[0] > 0 else 0.0,
        }
        shell_table["control_x_energy"] = xe
    return NormReport("x_energy", sup_x, shell_table, {}, md)
