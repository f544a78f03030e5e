"""Littlewood-Paley projectors, Besov/Sobolev norms and paradifferential checks.

The shell cutoff is the concrete smooth partition

    f(t)   = exp(-1/t) for t > 0, else 0
    psi(x) = f(2 - x) / (f(2 - x) + f(x - 1))   on (1, 2); 1 below, 0 above
    chi(x) = psi(x) - psi(2x)

so ``chi`` is supported in [1/2, 2], ``chi(1) = 1`` and the dyadic sum of
``chi(x / 2^k)`` telescopes to 1 for every ``x > 0``. The zero frequency is
never part of any ``P_k``; it is the separate "mean" channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintViolated, DegenerateInput, NonDecayingInput
from .spectral_grid import GridSpec, RealField, pairwise_sum


def transition(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def plateau(x):
    x = np.asarray(x, dtype=float)
    out = np.where(x <= 1.0, 1.0, 0.0)
    mid = (x > 1.0) & (x < 2.0)
    if np.any(mid):
        a = transition(2.0 - x[mid])
        b = transition(x[mid] - 1.0)
        out[mid] = a / (a + b)
    return out


def shell(x):
    return plateau(x) - plateau(2.0 * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class CutoffProfile:
    """The transition/plateau/shell triple; exposed for diagnostics and tests."""

    def transition(self, t):
        return transition(t)

    def plateau(self, x):
        return plateau(x)

    def shell(self, x):
        return shell(x)


CHI = CutoffProfile()


@dataclass(frozen=True)
class DyadicRange:
    """Shells ``k_min..k_max`` that the lattice can represent.

    ``k_min`` sits one octave below the lowest nonzero lattice frequency, so
    nothing lies below it. ``k_max`` is the largest ``k`` with
    ``2^k <= max|xi|``; the top shell absorbs everything above it.
    """

    k_min: int
    k_max: int

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "DyadicRange":
        k_min = math.floor(math.log2(grid.min_frequency)) - 1
        k_max = math.floor(math.log2(grid.max_frequency))
        return cls(k_min, k_max)

    def shells(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def weight(self, k: int, mag: np.ndarray) -> np.ndarray:
        """Shell weight with the boundary shells absorbing the tails."""
        if k < self.k_min or k > self.k_max:
            return np.zeros_like(mag, dtype=float)
        if k == self.k_min:
            w = plateau(mag / 2.0**k)
        elif k == self.k_max:
            w = 1.0 - plateau(mag / 2.0 ** (k - 1))
        else:
            w = shell(mag / 2.0**k)
        return np.where(mag > 0, w, 0.0)


def _shell_symbol(grid: GridSpec, k: int) -> np.ndarray:
    return np.where(grid.kmag > 0, shell(grid.kmag / 2.0**k), 0.0)


def lp_project(k: int, f: RealField) -> RealField:
    """Apply ``P_k``: multiply the spectrum by ``chi(|xi| / 2^k)``."""
    return RealField(f.grid, f.grid.apply(_shell_symbol(f.grid, k), f.samples))


def band_symbol(grid: GridSpec, lo=None, hi=None) -> np.ndarray:
    """Weights of ``sum_{lo <= k <= hi} P_k``; ``None`` or infinities mean unbounded."""
    mag = grid.kmag
    lo_inf = lo is None or lo == -math.inf
    hi_inf = hi is None or hi == math.inf
    upper = np.ones_like(mag) if hi_inf else plateau(mag / 2.0 ** int(hi))
    lower = np.zeros_like(mag) if lo_inf else plateau(mag / 2.0 ** (int(lo) - 1))
    return np.where(mag > 0, upper - lower, 0.0)


def lp_band(lo, hi, f: RealField) -> RealField:
    """``P_{[lo, hi]} f``; ``P_{<k}`` is ``lp_band(None, k - 1, f)``."""
    return RealField(f.grid, f.grid.apply(band_symbol(f.grid, lo, hi), f.samples))


def lp_decompose(f: RealField, drange: DyadicRange | None = None) -> dict:
    """Shell pieces over the representable range; with the mean they sum to ``f``."""
    grid = f.grid
    drange = drange or DyadicRange.for_grid(grid)
    c = grid.fft(f.samples)
    return {k: RealField(grid, np.real(grid.ifft(drange.weight(k, grid.kmag) * c))) for k in drange.shells()}


def sobolev_norm(r: float, f: RealField) -> float:
    """Homogeneous ``H^r`` norm, zero mode excluded."""
    grid = f.grid
    w = np.sqrt(grid.power_symbol(r))
    return grid.spectral_l2_norm(grid.fft(f.samples), w)


def _check_decaying(f: RealField, tol: float = 1e-10):
    """Reject fields whose mean dominates their fluctuation (``u`` passed instead of ``u - p``)."""
    a = f.samples
    scale = float(np.abs(a).max())
    if scale == 0.0:
        return
    mean = f.mean()
    if np.linalg.norm(mean) <= tol * scale:
        return
    fluct = a - mean.reshape((-1,) + (1,) * f.grid.dim)
    if np.linalg.norm(mean) > float(np.sqrt((fluct * fluct).sum(axis=0)).max()):
        raise NonDecayingInput(
            "field mean exceeds its fluctuation; subtract the base point first (model.relative_field)"
        )


@dataclass(frozen=True)
class BesovNorms:
    sobolev_sum: float  # sum_k ||P_k f||_{H^r}
    dyadic_sum: float  # sum_k 2^{rk} ||P_k f||_{L^2}
    shell_values: dict


def besov_report(r: float, f: RealField) -> BesovNorms:
    _check_decaying(f)
    grid = f.grid
    drange = DyadicRange.for_grid(grid)
    c = grid.fft(f.samples)
    sob_w = np.sqrt(grid.power_symbol(r))
    total_sob = 0.0
    total_dya = 0.0
    table = {}
    for k in drange.shells():
        w = drange.weight(k, grid.kmag)
        hs = grid.spectral_l2_norm(c, w * sob_w)
        l2 = grid.spectral_l2_norm(c, w)
        table[k] = {"sobolev": hs, "l2": l2}
        total_sob += hs
        total_dya += 2.0 ** (r * k) * l2
    return BesovNorms(total_sob, total_dya, table)


def besov_norm(r: float, f: RealField, variant: str = "sobolev") -> float:
    """``sum_k ||P_k f||_{H^r}`` (default) or ``sum_k 2^{rk} ||P_k f||_{L^2}``."""
    rep = besov_report(r, f)
    if variant == "sobolev":
        return rep.sobolev_sum
    if variant == "dyadic":
        return rep.dyadic_sum
    raise ValueError(f"unknown Besov variant {variant!r}")


def lebesgue_norm(grid: GridSpec, a: np.ndarray, p: float) -> float:
    """Discrete ``L^p`` of the pointwise Euclidean magnitude; ``p=inf`` is the sampled max."""
    mag = np.sqrt((np.asarray(a) ** 2).sum(axis=0))
    if math.isinf(p):
        return float(mag.max())
    return float((grid.cell_volume * pairwise_sum(mag**p)) ** (1.0 / p))


def bernstein_ratio(k: int, p: float, q: float, f: RealField) -> float:
    """``||P_k f||_q / (2^{(n/p - n/q)k} ||P_k f||_p)``."""
    if not (1 <= p <= q):
        raise ValueError("require 1 <= p <= q <= inf")
    grid = f.grid
    pk = lp_project(k, f).samples
    den = lebesgue_norm(grid, pk, p)
    if den == 0.0:
        raise DegenerateInput(f"P_{k} f vanishes in L^{p}")
    n = grid.dim
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    return lebesgue_norm(grid, pk, q) / (2.0 ** ((n / p - n * inv_q) * k) * den)


def _dot(a, b):
    return (a * b).sum(axis=0, keepdims=True)


def paradiff_residual(m: int, k: int, u, check_constraint: bool = True, tol: float = 1e-9) -> float:
    """``|| P_m(u_lo . u_hi) + 1/2 P_m(u_hi . u_hi) ||_{L^2}`` for ``m >= k + 3``.

    ``u_hi = P_{>=k} u`` and ``u_lo = u - u_hi`` (the mean is part of the low
    piece, as the base point is in the identity). The identity follows from
    ``u . u = 1``, so sphere-valued input gives roundoff.
    """
    if m < k + 3:
        raise ValueError("the identity requires m >= k + 3")
    base = getattr(u, "base", u)
    grid = base.grid
    a = base.samples
    if check_constraint:
        dev = float(np.abs((a * a).sum(axis=0) - 1.0).max())
        if dev > tol:
            raise ConstraintViolated(dev, tol, "paradiff_residual")
    hi = grid.apply(band_symbol(grid, k, None), a)
    lo = a - hi
    pm = _shell_symbol(grid, m)
    res = grid.apply(pm, _dot(lo, hi)) + 0.5 * grid.apply(pm, _dot(hi, hi))
    return grid.l2_norm(res)
