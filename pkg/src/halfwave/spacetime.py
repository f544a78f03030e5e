"""Space-time analysis of sampled trajectories.

A :class:`TrajectorySlab` holds uniformly spaced frames. Modulation shells
``Q_j`` act through the space-time DFT on the lattice ``(tau, xi)`` with the
weight ``chi(||tau| - |xi|| / 2^j)``. Trajectories from the integrators are
not time-periodic, so a Hann taper is applied before that transform unless
the slab is declared periodic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

from .dyadic import DyadicRange, lebesgue_norm, plateau, shell
from .errors import SlabError, WindowRequired
from .report import NormReport
from .spectral_grid import GridSpec, RealField

WINDOWS = ("none", "hann")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class TrajectorySlab:
    """Frames ``u(t_i)`` stacked as an array of shape ``(M+1, components, *grid.shape)``.

    ``rates`` optionally stores ``u_t`` at the same instants. ``periodic``
    declares the trajectory time-periodic with period ``(M+1) * dt``, in
    which case no taper is needed.
    """

    grid: GridSpec
    times: np.ndarray
    frames: np.ndarray = field(repr=False)
    window: str = "hann"
    periodic: bool = False
    rates: np.ndarray | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        a = np.asarray(self.frames, dtype=float)
        if a.ndim == self.grid.dim + 1:
            a = a[:, None]
        if a.shape[0] != t.size or a.shape[2:] != self.grid.shape:
            raise SlabError(f"frames of shape {a.shape} do not match {t.size} times on grid {self.grid.shape}")
        if t.size >= 2:
            d = np.diff(t)
            if d.min() <= 0 or (d.max() - d.min()) > 1e-9 * max(abs(d.mean()), 1e-300) + 1e-14:
                raise SlabError("frame times must be uniformly spaced and increasing")
        if self.window not in WINDOWS:
            raise SlabError(f"window must be one of {WINDOWS}")
        if not np.all(np.isfinite(a)):
            raise SlabError("frames must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "frames", a)
        if self.rates is not None:
            r = np.asarray(self.rates, dtype=float)
            if r.shape != a.shape:
                raise SlabError("rates must have the same shape as frames")
            object.__setattr__(self, "rates", r)

    @property
    def n_frames(self) -> int:
        return self.times.size

    @property
    def components(self) -> int:
        return self.frames.shape[1]

    @property
    def frame_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.n_frames > 1 else 0.0

    def frame(self, i: int) -> RealField:
        return RealField(self.grid, self.frames[i])

    def with_frames(self, frames, **kw) -> "TrajectorySlab":
        args = dict(grid=self.grid, times=self.times, frames=frames, window=self.window, periodic=self.periodic)
        args.update(kw)
        return TrajectorySlab(**args)

    def scaled(self, alpha: float) -> "TrajectorySlab":
        rates = None if self.rates is None else alpha * self.rates
        return self.with_frames(alpha * self.frames, rates=rates)


# -- Strichartz --------------------------------------------------------------


def is_admissible(p: float, q: float, n: int = 4) -> bool:
    """``p >= 2`` and ``1/p + (n-1)/(2q) <= (n-1)/4`` (for ``n = 4``: ``1/p + 3/(2q) <= 3/4``)."""
    if p < 2 or q < 2:
        return False
    ip = 0.0 if math.isinf(p) else 1.0 / p
    iq = 0.0 if math.isinf(q) else 1.0 / q
    return ip + (n - 1) * iq / 2.0 <= (n - 1) / 4.0 + 1e-15


@dataclass(frozen=True)
class AdmissiblePair:
    p: float
    q: float

    def __post_init__(self):
        if not (2 <= self.p <= math.inf and 2 <= self.q <= math.inf):
            raise ValueError("exponents must lie in [2, inf]")

    def admissible(self, n: int = 4) -> bool:
        return is_admissible(self.p, self.q, n)

    def exponent(self, n: int) -> float:
        """Shell weight exponent ``1/p + n/q - 1``."""
        ip = 0.0 if math.isinf(self.p) else 1.0 / self.p
        iq = 0.0 if math.isinf(self.q) else 1.0 / self.q
        return ip + n * iq - 1.0

    @property
    def label(self) -> str:
        f = lambda x: "inf" if math.isinf(x) else f"{x:g}"
        return f"({f(self.p)},{f(self.q)})"


DEFAULT_PAIRS = (
    AdmissiblePair(math.inf, 2.0),
    AdmissiblePair(2.0, math.inf),
    AdmissiblePair(4.0, 4.0),
    AdmissiblePair(3.0, 6.0),
)


def _time_lp(values: np.ndarray, p: float, dt: float) -> float:
    if math.isinf(p):
        return float(values.max())
    if values.size < 2:
        raise SlabError("finite time exponents need at least two frames")
    w = np.full(values.size, dt)
    w[0] = w[-1] = 0.5 * dt
    return float((w * values**p).sum() ** (1.0 / p))


def strichartz_norm(pair: AdmissiblePair, slab: TrajectorySlab) -> float:
    """Discrete ``L^p_t L^q_x``; trapezoid rule in time, sampled max for infinite exponents."""
    spatial = np.array([lebesgue_norm(slab.grid, f, pair.q) for f in slab.frames])
    return _time_lp(spatial, pair.p, slab.frame_dt)


# -- modulation shells --------------------------------------------------------


def _taper(slab: TrajectorySlab) -> np.ndarray:
    m = slab.n_frames
    if not _is_power_of_two(m):
        raise SlabError(f"space-time transforms need a power-of-two frame count, got {m}")
    if slab.periodic:
        return np.ones(m)
    if slab.window == "none":
        raise WindowRequired("trajectory is not time-periodic; use window='hann'")
    return get_window("hann", m, fftbins=True)


def _st_axes(slab: TrajectorySlab) -> tuple:
    return (0,) + tuple(range(2, 2 + slab.grid.dim))


def spacetime_coefficients(slab: TrajectorySlab) -> np.ndarray:
    w = _taper(slab).reshape((-1,) + (1,) * (slab.frames.ndim - 1))
    return np.fft.fftn(w * slab.frames, axes=_st_axes(slab), norm="forward")


def temporal_frequencies(slab: TrajectorySlab) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(slab.n_frames, d=slab.frame_dt)


def cone_distance(slab: TrajectorySlab) -> np.ndarray:
    """``||tau| - |xi||`` broadcast to ``(M+1, 1, *shape)``."""
    tau = np.abs(temporal_frequencies(slab)).reshape((-1, 1) + (1,) * slab.grid.dim)
    return np.abs(tau - slab.grid.kmag[None, None])


@dataclass(frozen=True)
class ModulationRange:
    """Shells ``j_min..j_max``; the bottom shell absorbs every modulation
    below ``2^{j_min}`` (including the cone itself), the top one everything
    above ``2^{j_max}``, so the weights sum to one on the whole lattice.

    ``2^{j_min}`` sits between one and two temporal resolution steps
    ``2*pi / ((M+1) dt)``, which is the width of the taper's main lobe.
    """

    j_min: int
    j_max: int

    @classmethod
    def for_slab(cls, slab: TrajectorySlab) -> "ModulationRange":
        dtau = 2.0 * np.pi / (slab.n_frames * slab.frame_dt)
        j_min = math.floor(math.log2(dtau)) + 1
        dmax = float(cone_distance(slab).max())
        j_max = max(j_min + 1, math.floor(math.log2(dmax)) if dmax > 0 else j_min + 1)
        return cls(j_min, j_max)

    def shells(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def weight(self, j: int, d: np.ndarray) -> np.ndarray:
        if j < self.j_min or j > self.j_max:
            return np.zeros_like(d)
        if j == self.j_min:
            return plateau(d / 2.0**j)
        if j == self.j_max:
            return 1.0 - plateau(d / 2.0 ** (j - 1))
        return shell(d / 2.0**j)


def modulation_project(j: int, slab: TrajectorySlab, mrange: ModulationRange | None = None) -> TrajectorySlab:
    """``Q_j`` of the (tapered) slab; the result is time-periodic by construction."""
    mrange = mrange or ModulationRange.for_slab(slab)
    c = spacetime_coefficients(slab)
    w = mrange.weight(j, cone_distance(slab))
    out = np.real(np.fft.ifftn(w * c, axes=_st_axes(slab), norm="forward"))
    return slab.with_frames(out, window="none", periodic=True)


def _st_l2(slab: TrajectorySlab, c: np.ndarray, weight: np.ndarray) -> float:
    duration = slab.n_frames * slab.frame_dt
    return float(np.sqrt(duration * slab.grid.volume * (np.abs(weight * c) ** 2).sum()))


def xsb_table(s: float, b: float, slab: TrajectorySlab, mrange: ModulationRange | None = None) -> dict:
    """``{j: 2^{jb} || |grad|^s Q_j u ||_{L^2_{t,x}}}``."""
    mrange = mrange or ModulationRange.for_slab(slab)
    c = spacetime_coefficients(slab)
    d = cone_distance(slab)
    sob = slab.grid.kmag[None, None] ** s if s != 0 else np.ones_like(d)
    return {j: 2.0 ** (j * b) * _st_l2(slab, c, mrange.weight(j, d) * sob) for j in mrange.shells()}


def xsb_norm(flavor: str, s: float, b: float, slab: TrajectorySlab, mrange: ModulationRange | None = None) -> float:
    """``sup_j`` (flavor ``"sup"``) or ``sum_j`` (``"sum"``) of ``2^{jb} || |grad|^s Q_j u ||``."""
    table = xsb_table(s, b, slab, mrange)
    if flavor == "sup":
        return max(table.values())
    if flavor == "sum":
        return float(sum(table.values()))
    raise ValueError("flavor must be 'sup' or 'sum'")


# -- S and N norms ------------------------------------------------------------


def time_derivative(frames: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite differences; one-sided five-point stencils at the ends."""
    m = frames.shape[0]
    if m < 5:
        raise SlabError("time derivative needs at least 5 frames")
    f = frames
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def spacetime_gradient(slab: TrajectorySlab, use_rates: bool = False) -> TrajectorySlab:
    """Slab of ``(d_t u, d_1 u, ..., d_n u)`` stacked along the component axis."""
    grid = slab.grid
    if use_rates and slab.rates is not None:
        dt_u = slab.rates
    else:
        dt_u = time_derivative(slab.frames, slab.frame_dt)
    c = grid.fft(slab.frames)
    parts = [dt_u] + [np.real(grid.ifft(sym * c)) for sym in grid.derivative_symbols]
    return slab.with_frames(np.concatenate(parts, axis=1), rates=None)


def _spatial_project(slab: TrajectorySlab, weight: np.ndarray) -> TrajectorySlab:
    grid = slab.grid
    return slab.with_frames(np.real(grid.ifft(weight * grid.fft(slab.frames))), rates=None)


def s_norm_proxy(slab: TrajectorySlab, pairs=DEFAULT_PAIRS, use_rates: bool = False) -> NormReport:
    """Finite-family proxy for the S norm.

    Per shell ``k``: ``sup_{(p,q)} 2^{(1/p + n/q - 1)k} ||grad_{t,x} P_k u||_{L^p L^q}``
    plus ``sup_j 2^{j/2} || |grad| Q_j grad_{t,x} P_k u ||_{L^2}``; the value is the
    sum over the representable shells.
    """
    grid = slab.grid
    n = grid.dim
    drange = DyadicRange.for_grid(grid)
    grad = spacetime_gradient(slab, use_rates)
    mrange = ModulationRange.for_slab(grad)
    shell_table = {}
    total = 0.0
    for k in drange.shells():
        piece = _spatial_project(grad, drange.weight(k, grid.kmag))
        vals = {pr.label: 2.0 ** (pr.exponent(n) * k) * strichartz_norm(pr, piece) for pr in pairs}
        sup = max(vals.values()) if vals else 0.0
        x = xsb_norm("sup", 1.0, 0.5, piece, mrange)
        shell_table[k] = {"pairs": vals, "strichartz_sup": sup, "xsb": x, "total": sup + x}
        total += sup + x
    pair_table = {
        pr.label: {"p": pr.p, "q": pr.q, "admissible": pr.admissible(n), "exponent": pr.exponent(n)} for pr in pairs
    }
    metadata = {
        "grid": grid.describe(),
        "window": "periodic" if slab.periodic else slab.window,
        "modulation_range": [mrange.j_min, mrange.j_max],
        "time_derivative": "rates" if (use_rates and slab.rates is not None) else "fd4",
        "general_n": n != 4,
    }
    return NormReport("s_norm_proxy", total, shell_table, pair_table, metadata)


def n_norm_upper(slab: TrajectorySlab, return_report: bool = False):
    """Upper bound for the N norm of a source slab.

    Every piece ``Q_j P_k F`` is charged the smaller of its ``L^1_t H^1``
    norm and its ``X^{1,-1/2,1}`` norm (summed over the neighbouring
    modulation shells that see it). This bounds the infimum over
    decompositions from above; it is not the norm itself.
    """
    grid = slab.grid
    drange = DyadicRange.for_grid(grid)
    mrange = ModulationRange.for_slab(slab)
    c = spacetime_coefficients(slab)
    d = cone_distance(slab)
    kmag = grid.kmag[None, None]
    h = slab.frame_dt
    duration = slab.n_frames * h
    total = 0.0
    table = {}
    for k in drange.shells():
        wk = drange.weight(k, grid.kmag)[None, None]
        ck = wk * c
        for j in mrange.shells():
            wj = mrange.weight(j, d)
            if not np.any(wj * wk):
                continue
            piece = wj * ck
            # L^1_t of the spatial H^1 norm; the piece is periodic in time
            per_t = np.fft.ifft(piece, axis=0, norm="forward")
            h1 = np.sqrt(grid.volume * (np.abs(kmag * per_t) ** 2).sum(axis=tuple(range(1, per_t.ndim))))
            l1 = float(h * h1.sum())
            xcost = 0.0
            for jj in (j - 1, j, j + 1):
                wjj = mrange.weight(jj, d)
                xcost += 2.0 ** (-jj / 2.0) * float(
                    np.sqrt(duration * grid.volume * (np.abs(wjj * kmag * piece) ** 2).sum())
                )
            cost = min(l1, xcost)
            if cost > 0:
                table[f"{k},{j}"] = {"l1h1": l1, "x": xcost, "assigned": "l1h1" if l1 <= xcost else "x"}
            total += cost
    if not return_report:
        return total
    meta = {"grid": grid.describe(), "window": "periodic" if slab.periodic else slab.window, "upper_bound": True}
    return NormReport("n_norm_upper", total, table, {}, meta)
