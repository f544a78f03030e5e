"""Sphere-valued fields and the right-hand sides of the half-wave maps flow.

Half-wave form:   u_t = u x L u,              L = (-Laplacian)^{1/2}
Wave form:        (d_t^2 - Laplacian) u = G1 + G2 + G3 with
    G1 = u (grad u . grad u - u_t . u_t)
    G2 = Pi_{u perp}(L u) (u . L u)
    G3 = u x L(u x L u) - u x (u x (-Laplacian) u)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dyadic import besov_norm
from .errors import BumpTooLarge, ConstraintViolated, DegenerateBase, NormalizationFailure
from .spectral_grid import GridSpec, RealField

RHS_CONSTRAINT_TOL = 1e-6
GROUP_NAMES = ("wave_maps", "projected", "commutator")


def constraint_deviation(a: np.ndarray) -> float:
    return float(np.abs((a * a).sum(axis=0) - 1.0).max())


@dataclass(frozen=True, eq=False)
class SphereField:
    """A 3-component field with ``| |u|^2 - 1 | <= constraint_tol`` everywhere."""

    base: RealField
    base_point: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    constraint_tol: float = 1e-12

    def __post_init__(self):
        if self.base.components != 3:
            raise ValueError("SphereField needs 3 components")
        p = np.asarray(self.base_point, dtype=float).reshape(3)
        if abs(np.dot(p, p) - 1.0) > 1e-12:
            raise ValueError("base point must be a unit vector")
        object.__setattr__(self, "base_point", p)
        dev = constraint_deviation(self.base.samples)
        if dev > self.constraint_tol:
            raise ConstraintViolated(dev, self.constraint_tol, "SphereField")

    @property
    def grid(self) -> GridSpec:
        return self.base.grid

    @property
    def samples(self) -> np.ndarray:
        return self.base.samples

    @classmethod
    def constant(cls, grid: GridSpec, p=(0.0, 0.0, 1.0)) -> "SphereField":
        p = np.asarray(p, dtype=float)
        a = np.empty((3,) + grid.shape)
        a[...] = p.reshape((3,) + (1,) * grid.dim)
        return cls(RealField(grid, a), p)


@dataclass(frozen=True, eq=False)
class WaveState:
    """Data pair ``(u, u_t)`` for the wave formulation."""

    u: SphereField
    ut: RealField

    def __post_init__(self):
        if self.ut.components != 3 or self.ut.grid != self.u.grid:
            raise ValueError("ut must be a 3-component field on the same grid as u")

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def tangency_defect(self) -> float:
        return float(np.abs((self.u.samples * self.ut.samples).sum(axis=0)).max())


def relative_field(u: SphereField) -> RealField:
    """``u - p``: decays outside the bump, suitable for homogeneous norms."""
    p = u.base_point.reshape((3,) + (1,) * u.grid.dim)
    return RealField(u.grid, u.samples - p)


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product over axis 0."""
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a * b).sum(axis=0)


def cross_triple(a, b, c):
    """``a x (b x c)``; accepts 3-vectors, ``(3, ...)`` arrays or RealFields."""
    if isinstance(a, RealField):
        return RealField(a.grid, cross(a.samples, cross(b.samples, c.samples)))
    return cross(np.asarray(a, float), cross(np.asarray(b, float), np.asarray(c, float)))


def cross_triple_expanded(a, b, c):
    """``b (a . c) - c (a . b)``, the expanded form of the triple product."""
    a, b, c = (np.asarray(x, float) for x in (a, b, c))
    return b * dot(a, c)[None] - c * dot(a, b)[None]


def _project(base: np.ndarray, v: np.ndarray) -> np.ndarray:
    mag = np.sqrt(dot(base, base))
    if mag.min() < 0.5:
        raise DegenerateBase(f"|base| = {mag.min():.3e} < 1/2")
    nhat = base / mag
    return v - nhat * dot(nhat, v)[None]


def tangent_projection(base: RealField, v: RealField) -> RealField:
    """Pointwise ``v - (n.v) n`` with ``n = base/|base|``."""
    return RealField(v.grid, _project(base.samples, v.samples))


def _check(a: np.ndarray, tol: float, where: str):
    dev = constraint_deviation(a)
    if dev > tol:
        raise ConstraintViolated(dev, tol, where)


def halfwave_rhs_array(grid: GridSpec, u: np.ndarray, dealias: bool = False) -> np.ndarray:
    out = cross(u, grid.frac_lap(0.5, u))
    return grid.dealias(out) if dealias else out


def halfwave_rhs(u: SphereField, dealias: bool = False) -> RealField:
    """``u x (-Laplacian)^{1/2} u``."""
    _check(u.samples, RHS_CONSTRAINT_TOL, "halfwave_rhs")
    return RealField(u.grid, halfwave_rhs_array(u.grid, u.samples, dealias))


def wave_maps_term(grid: GridSpec, u: np.ndarray, ut: np.ndarray) -> np.ndarray:
    g = grid.grad(u)
    null = (g * g).sum(axis=(0, 1)) - dot(ut, ut)
    return u * null[None]


def nonlocal_pieces(grid: GridSpec, u: np.ndarray):
    """``(L u, u . L u, G3)`` computed from ``u`` alone."""
    lu = grid.frac_lap(0.5, u)
    s = dot(u, lu)
    v = cross(u, lu)
    g3 = cross(u, grid.frac_lap(0.5, v)) - cross(u, cross(u, grid.frac_lap(1.0, u)))
    return lu, s, g3


def source_groups_array(grid: GridSpec, u: np.ndarray, ut: np.ndarray, dealias: bool = True) -> dict:
    g1 = wave_maps_term(grid, u, ut)
    lu, s, g3 = nonlocal_pieces(grid, u)
    g2 = _project(u, lu) * s[None]
    out = {"wave_maps": g1, "projected": g2, "commutator": g3}
    if dealias:
        out = {k: grid.dealias(v) for k, v in out.items()}
    return out


def waveform_rhs_array(grid: GridSpec, u: np.ndarray, ut: np.ndarray, dealias: bool = True) -> np.ndarray:
    g = source_groups_array(grid, u, ut, dealias)
    return g["wave_maps"] + g["projected"] + g["commutator"]


def source_groups(state: WaveState, dealias: bool = True) -> dict:
    """The three source groups of the wave form as separate fields."""
    _check(state.u.samples, RHS_CONSTRAINT_TOL, "waveform_rhs")
    g = source_groups_array(state.grid, state.u.samples, state.ut.samples, dealias)
    return {k: RealField(state.grid, v) for k, v in g.items()}


def commutator_group(u: RealField, dealias: bool = False) -> RealField:
    """G3 for an arbitrary 3-component field (no constraint check)."""
    _, _, g3 = nonlocal_pieces(u.grid, u.samples)
    return RealField(u.grid, u.grid.dealias(g3) if dealias else g3)


def waveform_rhs(state: WaveState, dealias: bool = True) -> RealField:
    g = source_groups(state, dealias)
    return g["wave_maps"] + g["projected"] + g["commutator"]


def energy_array(grid: GridSpec, u: np.ndarray) -> float:
    return grid.spectral_l2_norm(grid.fft(u), np.sqrt(grid.power_symbol(0.5))) ** 2


def energy(u) -> float:
    """``int |(-Laplacian)^{1/4} u|^2 dx`` via Parseval."""
    base = getattr(u, "base", u)
    return energy_array(base.grid, base.samples)


def x_functional_array(grid: GridSpec, u: np.ndarray, ut: np.ndarray) -> np.ndarray:
    return ut - halfwave_rhs_array(grid, u)


def x_functional(state: WaveState) -> RealField:
    """``X = u_t - u x (-Laplacian)^{1/2} u``."""
    return RealField(state.grid, x_functional_array(state.grid, state.u.samples, state.ut.samples))


def x_energy_array(grid: GridSpec, u: np.ndarray, ut: np.ndarray) -> float:
    return 0.5 * energy_array(grid, x_functional_array(grid, u, ut))


def x_energy(state: WaveState) -> float:
    return x_energy_array(state.grid, state.u.samples, state.ut.samples)


def dt_x_rhs_array(grid: GridSpec, u: np.ndarray, ut: np.ndarray) -> np.ndarray:
    lu = grid.frac_lap(0.5, u)
    x = ut - cross(u, lu)
    lx = grid.frac_lap(0.5, x)
    w = cross(u, lu) + ut
    return -cross(x, lu) - cross(u, lx) - u * dot(x, w)[None]


def dt_x_rhs(state: WaveState) -> RealField:
    """``-X x L u - u x L X - u (X . (u x L u + u_t))``."""
    _check(state.u.samples, RHS_CONSTRAINT_TOL, "dt_x_rhs")
    return RealField(state.grid, dt_x_rhs_array(state.grid, state.u.samples, state.ut.samples))


def rotate(a: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Apply a 3x3 matrix to the component axis."""
    return np.einsum("ij,j...->i...", np.asarray(R, float), a)


# -- initial data -----------------------------------------------------------


@dataclass(frozen=True)
class BumpProfile:
    """Bump descriptor: ``{center, radius, direction_seed, epsilon}``.

    ``center`` defaults to the box center and ``radius`` to ``L/8``.
    ``sharpness`` multiplies the compact profile by ``exp(-sharpness s^2)``
    so the edge of the support carries almost no spectral weight.
    """

    center: tuple | None = None
    radius: float | None = None
    direction_seed: int = 0
    epsilon: float = 0.1
    base_point: tuple = (0.0, 0.0, 1.0)
    sharpness: float = 16.0

    @classmethod
    def from_dict(cls, d: dict) -> "BumpProfile":
        keys = {"center", "radius", "direction_seed", "epsilon", "base_point", "sharpness"}
        kw = {k: v for k, v in d.items() if k in keys}
        if kw.get("center") is not None:
            kw["center"] = tuple(kw["center"])
        if "base_point" in kw:
            kw["base_point"] = tuple(kw["base_point"])
        return cls(**kw)


def _periodic_offset(x: np.ndarray, c: float, L: float) -> np.ndarray:
    d = x - c
    return d - L * np.round(d / L)


def bump_perturbation(profile: BumpProfile, grid: GridSpec) -> tuple:
    """Unscaled tangent perturbation ``phi`` and its support mask."""
    L = grid.L
    r = profile.radius if profile.radius is not None else L / 8.0
    if 2.0 * r > L / 4.0 + 1e-12:
        raise BumpTooLarge(f"support diameter {2 * r:g} exceeds L/4 = {L / 4:g}")
    center = profile.center if profile.center is not None else (L / 2.0,) * grid.dim
    if len(center) != grid.dim:
        raise ValueError("bump center must have one entry per dimension")
    offs = [_periodic_offset(x, c, L) for x, c in zip(grid.coords, center)]
    s2 = sum(o * o for o in offs) / r**2
    inside = s2 < 1.0
    b = np.zeros(grid.shape)
    si = s2[inside]
    b[inside] = np.exp(1.0 - 1.0 / (1.0 - si) - profile.sharpness * si)

    p = np.asarray(profile.base_point, dtype=float)
    p = p / np.linalg.norm(p)
    rng = np.random.Generator(np.random.Philox(profile.direction_seed))
    a = rng.standard_normal(3)
    e1 = a - np.dot(a, p) * p
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(p, e1)
    alpha, beta = 1.0 + 0.5 * rng.random(), 1.0 + 0.5 * rng.random()
    phi = b[None] * (alpha * e1.reshape(3, *(1,) * grid.dim) + beta * (offs[0] / r)[None] * e2.reshape(3, *(1,) * grid.dim))
    return phi, inside, p


def _sphere_from(p: np.ndarray, phi: np.ndarray, inside: np.ndarray, amplitude: float) -> np.ndarray:
    dim = phi.ndim - 1
    pb = np.broadcast_to(p.reshape((3,) + (1,) * dim), phi.shape)
    w = pb + amplitude * phi
    mag = np.sqrt(dot(w, w))
    if mag.min() < 0.5:
        raise NormalizationFailure(f"|p + eps phi| = {mag.min():.3e} < 1/2")
    return np.where(inside[None], w / mag[None], pb)


def make_initial_data(profile: BumpProfile, epsilon: float | None, grid: GridSpec) -> WaveState:
    """Compatible small data: ``u_0 = normalize(p + A phi)`` with
    ``A`` chosen so that ``besov_norm(2, u_0 - p) = epsilon``, and
    ``u_1 = u_0 x (-Laplacian)^{1/2} u_0``.
    """
    eps = profile.epsilon if epsilon is None else float(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    phi, inside, p = bump_perturbation(profile, grid)
    if eps == 0.0:
        u = SphereField.constant(grid, p)
        return WaveState(u, RealField(grid, np.zeros((3,) + grid.shape)))

    def besov_of(A):
        a = _sphere_from(p, phi, inside, A)
        return besov_norm(2.0, RealField(grid, a - p.reshape((3,) + (1,) * grid.dim)))

    hi = eps / besov_norm(2.0, RealField(grid, phi))
    while besov_of(hi) < eps:
        hi *= 2.0
    A = brentq(lambda t: besov_of(t) - eps, 0.0, hi, xtol=1e-15, rtol=1e-13)
    u0 = _sphere_from(p, phi, inside, A)
    u = SphereField(RealField(grid, u0), p)
    return WaveState(u, RealField(grid, halfwave_rhs_array(grid, u0)))


def incompatible_data(state: WaveState) -> WaveState:
    """Same ``u_0`` with ``u_1 = 0``."""
    return WaveState(state.u, RealField(state.grid, np.zeros_like(state.ut.samples)))
