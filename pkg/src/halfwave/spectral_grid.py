"""Periodic-box discretization and Fourier multipliers.

Fields are stored as arrays of shape ``(components, N, ..., N)`` with one
spatial axis per dimension. Fourier coefficients use the normalization

    c(xi) = N^{-dim} * sum_x f(x) exp(-i xi . x),

so a constant field ``c`` has coefficient ``c`` at the zero frequency and
Parseval reads ``||f||_{L^2}^2 = L^dim * sum_xi |c(xi)|^2``.

All homogeneous multipliers (``|xi|^{2s}``, Riesz transforms) are defined
to vanish at ``xi = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import GridError, NonHermitianSymbol

CFL_FACTOR = 0.5
HERMITIAN_RTOL = 1e-12

Symbol = Callable[[tuple], np.ndarray]


def pairwise_sum(a) -> float:
    """Sum all entries of ``a`` in a fixed order.

    numpy reduces a contiguous 1-D float array with blocked pairwise
    summation and no threading, so the result depends only on the data.
    """
    flat = np.ascontiguousarray(a).reshape(-1)
    return flat.sum()


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Periodic box ``[0, L)^dim`` sampled with ``N`` points per axis.

    ``dt`` defaults to ``CFL_FACTOR * dx / 2`` when omitted.
    """

    dim: int
    points_per_axis: int
    box_length: float = 2.0 * np.pi
    dt: float | None = None
    t_end: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2, 3, 4):
            raise GridError(f"dim must be in 1..4, got {self.dim}")
        n = int(self.points_per_axis)
        if n < 8 or not _is_power_of_two(n):
            raise GridError(f"points_per_axis must be a power of two >= 8, got {self.points_per_axis}")
        if not self.box_length > 0:
            raise GridError("box_length must be positive")
        if not self.t_end > 0:
            raise GridError("t_end must be positive")
        dx = self.box_length / n
        if self.dt is None:
            object.__setattr__(self, "dt", 0.5 * CFL_FACTOR * dx)
        if not self.dt > 0:
            raise GridError("dt must be positive")
        if self.dt > CFL_FACTOR * dx * (1 + 1e-12):
            raise GridError(f"dt={self.dt:g} violates dt <= {CFL_FACTOR} * dx = {CFL_FACTOR * dx:g}")

    # -- geometry ---------------------------------------------------------
    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def L(self) -> float:
        return self.box_length

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple:
        """Spatial axes of a ``(components, *shape)`` array."""
        return tuple(range(1, self.dim + 1))

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return self.L**self.dim

    def replace(self, **changes) -> "GridSpec":
        kw = dict(dim=self.dim, points_per_axis=self.n, box_length=self.L, dt=self.dt, t_end=self.t_end)
        kw.update(changes)
        return GridSpec(**kw)

    def describe(self) -> dict:
        return {"dim": self.dim, "points_per_axis": self.n, "box_length": self.L, "dt": self.dt, "t_end": self.t_end}

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        """Signed lattice frequencies 2*pi*m/L in FFT order (Nyquist negative)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def xi(self) -> tuple:
        """Frequency components broadcast to the full lattice shape."""
        return tuple(np.meshgrid(*([self.axis_frequencies] * self.dim), indexing="ij"))

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(sum(k * k for k in self.xi))

    @cached_property
    def coords(self) -> tuple:
        x = np.arange(self.n) * self.dx
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    @cached_property
    def min_frequency(self) -> float:
        return 2.0 * np.pi / self.L

    @cached_property
    def max_frequency(self) -> float:
        return float(self.kmag.max())

    @cached_property
    def nyquist_mask(self) -> tuple:
        """Per-axis boolean arrays marking the self-conjugate Nyquist plane."""
        half = -self.n // 2
        m = np.round(self.axis_frequencies / self.min_frequency).astype(int)
        masks = []
        for j in range(self.dim):
            shape = [1] * self.dim
            shape[j] = self.n
            masks.append((m == half).reshape(shape))
        return tuple(masks)

    @cached_property
    def derivative_symbols(self) -> tuple:
        """``i xi_j`` with the Nyquist plane zeroed (Hermitian part of the symbol)."""
        out = []
        for j in range(self.dim):
            shape = [1] * self.dim
            shape[j] = self.n
            k = self.axis_frequencies.reshape(shape) * (~self.nyquist_mask[j])
            out.append(1j * k)
        return tuple(out)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with |m_j| <= N/3 on every axis."""
        m = np.abs(np.round(self.axis_frequencies / self.min_frequency))
        keep1 = m <= self.n / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for j in range(self.dim):
            shape = [1] * self.dim
            shape[j] = self.n
            mask = mask & keep1.reshape(shape)
        return mask

    def power_symbol(self, s: float) -> np.ndarray:
        """``|xi|^{2s}`` with the zero frequency mapped to 0 (``s != 0``)."""
        cache = self.__dict__.setdefault("_power_cache", {})
        key = float(s)
        if key not in cache:
            if key == 0.0:
                sym = np.ones(self.shape)
            else:
                k = self.kmag
                sym = np.zeros(self.shape)
                nz = k > 0
                sym[nz] = k[nz] ** (2.0 * key)
            sym.setflags(write=False)
            cache[key] = sym
        return cache[key]

    # -- array kernels ----------------------------------------------------
    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.fftn(a, axes=self._last_axes(a), norm="forward")

    def ifft(self, c: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(c, axes=self._last_axes(c), norm="forward")

    def _last_axes(self, a) -> tuple:
        return tuple(range(a.ndim - self.dim, a.ndim))

    def apply(self, symbol: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Real output of a multiplier whose lattice symbol is already Hermitian."""
        return np.real(self.ifft(symbol * self.fft(a)))

    def frac_lap(self, s: float, a: np.ndarray) -> np.ndarray:
        return self.apply(self.power_symbol(s), a)

    def grad(self, a: np.ndarray) -> np.ndarray:
        """Gradient; output shape ``(dim,) + a.shape``."""
        c = self.fft(a)
        return np.stack([np.real(self.ifft(sym * c)) for sym in self.derivative_symbols])

    def lap(self, a: np.ndarray) -> np.ndarray:
        return -self.frac_lap(1.0, a)

    def dealias(self, a: np.ndarray) -> np.ndarray:
        return np.real(self.ifft(self.dealias_mask * self.fft(a)))

    def l2_norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(self.cell_volume * pairwise_sum(np.abs(a) ** 2)))

    def spectral_l2_norm(self, c: np.ndarray, weight: np.ndarray | None = None) -> float:
        """``sqrt(L^dim * sum weight^2 |c|^2)`` for coefficients ``c``."""
        p = np.abs(c) ** 2
        if weight is not None:
            p = p * weight**2
        return float(np.sqrt(self.volume * pairwise_sum(p)))

    def check_samples(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == self.dim:
            a = a[None]
        if a.shape[1:] != self.shape:
            raise GridError(f"samples of shape {a.shape} do not match grid {self.shape}")
        return a


def flip_lattice(a: np.ndarray, dim: int) -> np.ndarray:
    """Return ``b`` with ``b[k] = a[-k mod N]`` along the last ``dim`` axes."""
    axes = tuple(range(a.ndim - dim, a.ndim))
    return np.roll(np.flip(a, axis=axes), 1, axis=axes)


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples of a vector field on the grid."""

    grid: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = self.grid.check_samples(self.samples)
        if not np.all(np.isfinite(a)):
            raise ValueError("RealField samples must be finite")
        object.__setattr__(self, "samples", a)

    @property
    def components(self) -> int:
        return self.samples.shape[0]

    def mean(self) -> np.ndarray:
        return self.samples.reshape(self.components, -1).mean(axis=1)

    def l2_norm(self) -> float:
        return self.grid.l2_norm(self.samples)

    def _coerce(self, other):
        if isinstance(other, RealField):
            return other.samples
        return other

    def __add__(self, other):
        return RealField(self.grid, self.samples + self._coerce(other))

    def __sub__(self, other):
        return RealField(self.grid, self.samples - self._coerce(other))

    def __mul__(self, alpha):
        return RealField(self.grid, self.samples * alpha)

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.samples)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients in FFT order, normalized as in the module docstring."""

    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim == self.grid.dim:
            c = c[None]
        if c.shape[1:] != self.grid.shape:
            raise GridError(f"coefficients of shape {c.shape} do not match grid {self.grid.shape}")
        object.__setattr__(self, "coefficients", c)

    @property
    def components(self) -> int:
        return self.coefficients.shape[0]

    def l2_norm(self) -> float:
        return self.grid.spectral_l2_norm(self.coefficients)

    def hermitian_defect(self) -> float:
        c = self.coefficients
        d = np.abs(c - np.conj(flip_lattice(c, self.grid.dim))).max()
        return float(d / max(np.abs(c).max(), 1e-300))


def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(f.grid, f.grid.fft(f.samples))


def to_real(F: SpectralField) -> RealField:
    """Inverse transform; the imaginary part (roundoff for Hermitian input) is dropped."""
    return RealField(F.grid, np.real(F.grid.ifft(F.coefficients)))


def evaluate_symbol(symbol: Symbol, grid: GridSpec) -> np.ndarray:
    return np.broadcast_to(np.asarray(symbol(grid.xi), dtype=complex), grid.shape)


def fourier_multiplier(symbol: Symbol, f: RealField, real_output: bool = True):
    """Apply ``symbol(xi)`` pointwise on the frequency lattice.

    ``symbol`` receives the tuple of frequency component arrays. With
    ``real_output`` the symbol must satisfy ``symbol(-xi) = conj(symbol(xi))``;
    on the self-conjugate Nyquist planes only its Hermitian part can act on
    a real field, so that part is used. Without ``real_output`` the raw
    symbol is applied and a :class:`SpectralField` is returned.
    """
    grid = f.grid
    s = evaluate_symbol(symbol, grid)
    coeffs = grid.fft(f.samples)
    if not real_output:
        return SpectralField(grid, s * coeffs)
    s_neg = np.broadcast_to(np.asarray(symbol(tuple(-k for k in grid.xi)), dtype=complex), grid.shape)
    scale = max(1.0, float(np.abs(s).max()))
    defect = float(np.abs(s_neg - np.conj(s)).max())
    if defect > HERMITIAN_RTOL * scale:
        raise NonHermitianSymbol(f"symbol(-xi) != conj(symbol(xi)) (defect {defect:.2e})")
    s_eff = 0.5 * (s + np.conj(flip_lattice(s, grid.dim)))
    return RealField(grid, np.real(grid.ifft(s_eff * coeffs)))


def fractional_laplacian(s: float, f: RealField) -> RealField:
    """``(-Laplacian)^s`` via the multiplier ``|xi|^{2s}`` (zero mode annihilated)."""
    return RealField(f.grid, f.grid.frac_lap(s, f.samples))


def _riesz(j: int):
    def symbol(xi):
        k = np.sqrt(sum(x * x for x in xi))
        inv = np.divide(1.0, k, out=np.zeros_like(k), where=k > 0)
        return 1j * xi[j] * inv

    return symbol


def riesz_transform(j: int, f: RealField) -> RealField:
    """``R_j f`` with symbol ``i xi_j / |xi|`` (0 at the zero frequency)."""
    return fourier_multiplier(_riesz(j), f)


def riesz_composition(f: RealField) -> RealField:
    """``-sum_j R_j d_j f`` with ``R_j`` of symbol ``i xi_j/|xi|``.

    The composition is carried out on the coefficients, so no intermediate
    field is forced real and the Nyquist plane is treated like any other mode.
    """
    grid = f.grid
    c = grid.fft(f.samples)
    k = grid.kmag
    inv = np.zeros_like(k)
    inv[k > 0] = 1.0 / k[k > 0]
    out = np.zeros_like(c)
    for xij in grid.xi:
        riesz = 1j * xij * inv
        deriv = 1j * xij
        out -= riesz * (deriv * c)
    return RealField(grid, np.real(grid.ifft(out)))


def gradient(f: RealField) -> list:
    g = f.grid.grad(f.samples)
    return [RealField(f.grid, gj) for gj in g]


def laplacian(f: RealField) -> RealField:
    return RealField(f.grid, f.grid.lap(f.samples))


def constant_field(grid: GridSpec, value: Sequence[float]) -> RealField:
    value = np.asarray(value, dtype=float).reshape(-1)
    a = np.empty((value.size,) + grid.shape)
    a[...] = value.reshape((-1,) + (1,) * grid.dim)
    return RealField(grid, a)
