"""Bilinear Fourier multipliers on dyadic shells and their Fourier-series expansion.

``F(u, v)(x) = sum_{xi, eta} m(xi, eta) u_k1^(xi) v_k2^(eta) e^{i x.(xi + eta)}``
with ``u_k = P_k u``; vector inputs are contracted with the dot product.
On the cell ``[-pi 2^k1, pi 2^k1)^n x [-pi 2^k2, pi 2^k2)^n`` the symbol is
expanded as ``sum a_mp exp(i (2^-k1 xi.m + 2^-k2 eta.p))``, which turns
``F`` into a sum of products of translates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import linregress

from .dyadic import lp_project, plateau, shell
from .errors import GridTooLarge, QuadratureFailure
from .spectral_grid import GridSpec, RealField

DENSE_MAX_DIM = 2
DENSE_MAX_N = 64
EXTENSION_NODES = (0.25, 0.5, 2.0, 3.0)


def _norm(v: tuple) -> np.ndarray:
    return np.sqrt(sum(c * c for c in v))


def _ramp_up(x, a, b):
    return 1.0 - plateau(1.0 + (x - a) / (b - a))


def _ramp_down(x, c, d):
    return plateau(1.0 + (x - c) / (d - c))


def annulus_extension(x):
    """Smooth cutoff equal to 1 on ``[1/2, 2]`` and vanishing outside ``(1/4, 3)``."""
    a, b, c, d = EXTENSION_NODES
    x = np.asarray(x, dtype=float)
    return _ramp_up(x, a, b) * _ramp_down(x, c, d)


@dataclass(frozen=True)
class BilinearSymbol:
    """Symbol ``m(xi, eta)`` attached to the shells ``(k1, k2)``.

    ``evaluator(xi, eta)`` receives tuples of frequency component arrays.
    Unless ``periodic`` is set, the symbol is multiplied by annulus cutoffs
    in ``xi`` and ``eta`` before expansion, which leaves it unchanged on
    the shell supports and makes it smooth and periodic on the cell.
    ``gain_exponent`` is the declared size: ``|m| ~ 2^{gain_exponent}``.
    """

    evaluator: Callable
    support_shells: tuple
    gain_exponent: float = 0.0
    name: str = "custom"
    periodic: bool = False

    @property
    def k1(self) -> int:
        return self.support_shells[0]

    @property
    def k2(self) -> int:
        return self.support_shells[1]

    def __call__(self, xi: tuple, eta: tuple) -> np.ndarray:
        return np.asarray(self.evaluator(xi, eta), dtype=complex)

    def extended(self, xi: tuple, eta: tuple) -> np.ndarray:
        val = self(xi, eta)
        if self.periodic:
            return val
        cut = annulus_extension(_norm(xi) / 2.0**self.k1) * annulus_extension(_norm(eta) / 2.0**self.k2)
        return np.where(cut > 0, val, 0.0) * cut


def unit_symbol(k1: int, k2: int = 0, c: complex = 1.0) -> BilinearSymbol:
    return BilinearSymbol(lambda xi, eta: c + 0 * xi[0] * eta[0], (k1, k2), 0.0, "unit", periodic=True)


def sqrt_commutator_symbol(k1: int, k2: int = 0) -> BilinearSymbol:
    """``chi_0(xi + eta)(|xi + eta| - |eta|)``."""

    def m(xi, eta):
        s = _norm(tuple(a + b for a, b in zip(xi, eta)))
        return shell(s) * (s - _norm(eta))

    return BilinearSymbol(m, (k1, k2), float(k1), "sqrt_commutator")


def sqrt_lap_commutator_symbol(k1: int, k2: int = 0) -> BilinearSymbol:
    """``chi_0(xi + eta) |eta| (|xi + eta| - |eta|)``."""

    def m(xi, eta):
        s = _norm(tuple(a + b for a, b in zip(xi, eta)))
        e = _norm(eta)
        return shell(s) * e * (s - e)

    return BilinearSymbol(m, (k1, k2), float(k1 + k2), "sqrt_lap_commutator")


SYMBOLS = {
    "unit": unit_symbol,
    "sqrt_commutator": sqrt_commutator_symbol,
    "sqrt_lap_commutator": sqrt_lap_commutator_symbol,
}


def get_symbol(name: str, k1: int, k2: int = 0) -> BilinearSymbol:
    try:
        return SYMBOLS[name](k1, k2)
    except KeyError:
        raise KeyError(f"unknown symbol {name!r}; known: {sorted(SYMBOLS)}") from None


# -- direct evaluation --------------------------------------------------------


def _shell_coefficients(k: int, f: RealField) -> np.ndarray:
    return f.grid.fft(lp_project(k, f).samples)


def apply_bilinear(sym: BilinearSymbol, u: RealField, v: RealField) -> RealField:
    """Direct double sum over the shell supports (a brute-force reference)."""
    grid = u.grid
    if grid.dim > DENSE_MAX_DIM or grid.n > DENSE_MAX_N:
        raise GridTooLarge(f"dense bilinear sum limited to dim <= {DENSE_MAX_DIM}, N <= {DENSE_MAX_N}")
    if u.components != v.components:
        raise ValueError("u and v must have the same number of components")
    cu = _shell_coefficients(sym.k1, u)
    cv = _shell_coefficients(sym.k2, v)
    alive_u = np.flatnonzero(np.abs(cu).reshape(u.components, -1).max(axis=0) > 0)
    alive_v = np.flatnonzero(np.abs(cv).reshape(v.components, -1).max(axis=0) > 0)
    shape = grid.shape
    out = np.zeros(grid.n**grid.dim, dtype=complex)
    if alive_u.size and alive_v.size:
        freqs = [k.reshape(-1) for k in grid.xi]
        idx_u = np.array(np.unravel_index(alive_u, shape))
        idx_v = np.array(np.unravel_index(alive_v, shape))
        xi = tuple(f[alive_u][:, None] for f in freqs)
        eta = tuple(f[alive_v][None, :] for f in freqs)
        mvals = sym(xi, eta)
        prod = (cu.reshape(u.components, -1)[:, alive_u][:, :, None] * cv.reshape(v.components, -1)[:, alive_v][:, None, :]).sum(axis=0)
        target = np.ravel_multi_index(tuple((idx_u[d][:, None] + idx_v[d][None, :]) % grid.n for d in range(grid.dim)), shape)
        np.add.at(out, target.reshape(-1), (mvals * prod).reshape(-1))
    return RealField(grid, np.real(grid.ifft(out.reshape(shape))))


# -- expansion ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SeriesExpansion:
    """Coefficients ``a_mp`` for ``|m_i|, |p_i| <= M`` (array axes: m components, then p)."""

    coefficients: np.ndarray = field(repr=False)
    order: int
    shells: tuple
    dim: int
    quadrature_points: int
    decay_slope: float
    tail_slope: float
    symbol_name: str = "custom"

    def coefficient(self, m, p) -> complex:
        M = self.order
        idx = tuple(int(x) + M for x in tuple(np.atleast_1d(m)) + tuple(np.atleast_1d(p)))
        return complex(self.coefficients[idx])

    @property
    def sup_coefficient(self) -> float:
        return float(np.abs(self.coefficients).max())

    def abs_sum(self) -> float:
        return float(np.abs(self.coefficients).sum())

    def table(self, threshold: float = 0.0) -> list:
        M, n = self.order, self.dim
        rows = []
        for idx in itertools.product(range(2 * M + 1), repeat=2 * n):
            a = self.coefficients[idx]
            if abs(a) > threshold:
                off = [i - M for i in idx]
                rows.append({"m": off[:n], "p": off[n:], "re": float(a.real), "im": float(a.imag), "abs": float(abs(a))})
        return rows


def _default_quadrature(dim: int) -> int:
    return 256 if dim == 1 else 32


def symbol_coefficients(sym: BilinearSymbol, dim: int, Q: int) -> np.ndarray:
    """All ``Q^{2n}`` coefficients by the trapezoid rule on the cell (FFT order)."""
    theta = 2.0 * np.pi * np.fft.fftfreq(Q)
    grids = np.meshgrid(*([theta] * (2 * dim)), indexing="ij", sparse=True)
    xi = tuple(2.0**sym.k1 * g for g in grids[:dim])
    eta = tuple(2.0**sym.k2 * g for g in grids[dim:])
    vals = np.broadcast_to(sym.extended(xi, eta), (Q,) * (2 * dim))
    return np.fft.fftn(vals, norm="forward")


def _envelope(coeffs: np.ndarray, Q: int, dim: int) -> dict:
    idx = np.fft.fftfreq(Q, d=1.0 / Q).astype(int)
    grids = np.meshgrid(*([np.abs(idx)] * (2 * dim)), indexing="ij", sparse=True)
    radius = sum(grids)
    radius = np.broadcast_to(radius, coeffs.shape).reshape(-1)
    mags = np.abs(coeffs).reshape(-1)
    env = np.zeros(radius.max() + 1)
    np.maximum.at(env, radius, mags)
    return env


def _fit_slope(env: np.ndarray, lo: int, hi: int) -> float:
    r = np.arange(lo, min(hi, env.size - 1) + 1)
    e = env[r]
    ok = e > 0
    if ok.sum() < 2:
        return -math.inf
    return float(linregress(np.log(r[ok]), np.log(e[ok])).slope)


def expand_symbol(sym: BilinearSymbol, M: int = 8, dim: int = 1, quadrature: int | None = None) -> SeriesExpansion:
    """Fourier coefficients of the (extended) symbol up to order ``M``.

    ``decay_slope`` is the log-log slope of ``max_{|m|+|p|=r} |a_mp|`` over
    ``2 <= r <= M``; ``tail_slope`` the same over ``M <= r <= Q/4``. A tail
    shallower than ``-2`` means the symbol is not smooth on the cell.
    """
    if M < 2:
        raise ValueError("expansion order must be at least 2")
    Q = quadrature or _default_quadrature(dim)
    if Q < 4 * M:
        raise ValueError("quadrature must resolve at least 4M points per axis")
    full = symbol_coefficients(sym, dim, Q)
    env = _envelope(full, Q, dim)
    if float(np.abs(full).max()) == 0.0:
        decay, tail = -math.inf, -math.inf
    else:
        decay = _fit_slope(env, 2, M)
        tail = _fit_slope(env, M, Q // 4)
    if tail > -2.0 and env[M:].max() > 1e-13 * env.max():
        raise QuadratureFailure(f"coefficient tail slope {tail:.2f} is shallower than -2")
    sel = np.arange(-M, M + 1) % Q
    kept = full[np.ix_(*([sel] * (2 * dim)))]
    return SeriesExpansion(kept, M, sym.support_shells, dim, Q, decay, tail, sym.name)


def _translates(grid: GridSpec, coeffs: np.ndarray, scale: float, M: int) -> np.ndarray:
    """``f(x + scale * m)`` for every ``m`` in ``[-M, M]^n``; shape ``(#m, components, N^n)``."""
    offsets = list(itertools.product(range(-M, M + 1), repeat=grid.dim))
    out = np.empty((len(offsets), coeffs.shape[0], grid.n**grid.dim))
    for i, m in enumerate(offsets):
        phase = np.exp(1j * scale * sum(k * mj for k, mj in zip(grid.xi, m)))
        out[i] = np.real(grid.ifft(phase * coeffs)).reshape(coeffs.shape[0], -1)
    return out


def apply_via_expansion(exp: SeriesExpansion, u: RealField, v: RealField) -> RealField:
    """``sum_mp a_mp u_k1(x + 2^-k1 m) . v_k2(x + 2^-k2 p)`` with spectral translations."""
    grid = u.grid
    if grid.dim != exp.dim:
        raise ValueError("expansion dimension does not match the grid")
    k1, k2 = exp.shells
    M = exp.order
    U = _translates(grid, _shell_coefficients(k1, u), 2.0**-k1, M)
    V = _translates(grid, _shell_coefficients(k2, v), 2.0**-k2, M)
    A = exp.coefficients.reshape(U.shape[0], V.shape[0])
    AV = np.einsum("mp,pcx->mcx", A, V)
    out = np.real((U * AV).sum(axis=(0, 1)))
    return RealField(grid, out.reshape(grid.shape))


# -- commutators --------------------------------------------------------------


def _dot_fields(grid: GridSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a * b).sum(axis=0)[None]


def commutator_sqrt(k1: int, u: RealField, v: RealField, k2: int = 0) -> RealField:
    """``P_0( L(u_k1 . v_k2) - u_k1 . L v_k2 )`` with ``L = (-Laplacian)^{1/2}``."""
    grid = u.grid
    a = lp_project(k1, u).samples
    b = lp_project(k2, v).samples
    p0 = np.where(grid.kmag > 0, shell(grid.kmag), 0.0)
    out = grid.frac_lap(0.5, _dot_fields(grid, a, b)) - _dot_fields(grid, a, grid.frac_lap(0.5, b))
    return RealField(grid, grid.apply(p0, out))


def commutator_sqrt_lap(k1: int, u: RealField, v: RealField, k2: int = 0) -> RealField:
    """``P_0( L(u_k1 . L v_k2) - u_k1 . (-Laplacian) v_k2 )``."""
    grid = u.grid
    a = lp_project(k1, u).samples
    b = lp_project(k2, v).samples
    p0 = np.where(grid.kmag > 0, shell(grid.kmag), 0.0)
    out = grid.frac_lap(0.5, _dot_fields(grid, a, grid.frac_lap(0.5, b))) - _dot_fields(grid, a, grid.frac_lap(1.0, b))
    return RealField(grid, grid.apply(p0, out))


def commutator_ratio(k1: int, u: RealField, v: RealField, k2: int = 0, lap: bool = False) -> float:
    """``||C(u, v)||_{L^2} / (||u_k1||_{L^2} ||v_k2||_{L^inf})``."""
    from .dyadic import lebesgue_norm

    grid = u.grid
    out = (commutator_sqrt_lap if lap else commutator_sqrt)(k1, u, v, k2)
    a = lp_project(k1, u).samples
    b = lp_project(k2, v).samples
    den = grid.l2_norm(a) * lebesgue_norm(grid, b, math.inf)
    return float(grid.l2_norm(out.samples) / den) if den > 0 else 0.0


def random_shell_field(grid: GridSpec, k: int, rng: np.random.Generator, components: int = 1) -> RealField:
    """Random real field with Fourier support in the shell ``k``."""
    c = rng.standard_normal((components,) + grid.shape) + 1j * rng.standard_normal((components,) + grid.shape)
    w = np.where(grid.kmag > 0, shell(grid.kmag / 2.0**k), 0.0)
    return RealField(grid, np.real(grid.ifft(w * c)))


def gain_regression(
    k1_values=range(-6, 1), k2_values=range(-2, 3), samples: int = 20, seed: int = 0, lap: bool = False, grid=None
) -> dict:
    """Fit ``log2`` of the ensemble-max ratio against ``k1``.

    For each ``k1`` the maximum runs over ``samples`` random shell-localized
    pairs and over every ``k2`` in ``k2_values``.
    """
    grid = grid or GridSpec(1, 512, box_length=2.0 * np.pi * 64)
    rng = np.random.Generator(np.random.Philox(seed))
    ks, logs, table = [], [], {}
    for k1 in k1_values:
        best = 0.0
        for k2 in k2_values:
            b2 = 0.0
            for _ in range(samples):
                u = random_shell_field(grid, k1, rng)
                v = random_shell_field(grid, k2, rng)
                b2 = max(b2, commutator_ratio(k1, u, v, k2, lap))
            table[f"{k1},{k2}"] = b2
            best = max(best, b2)
        ks.append(k1)
        logs.append(math.log2(best))
    fit = linregress(ks, logs)
    slope, intercept = fit.slope, fit.intercept
    return {"k1": ks, "log2_max_ratio": logs, "slope": float(slope), "intercept": float(intercept), "table": table}
