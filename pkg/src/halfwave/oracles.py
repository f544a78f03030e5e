"""Brute-force reference implementations used by the test and verify suites.

Nothing here calls an FFT: transforms are explicit O(N^2)-per-axis matrix
products (einsum, so no threaded BLAS is involved), and symbols are symmetrized with explicit index arithmetic.
"""

from __future__ import annotations

import itertools

import numpy as np


def dft_matrix(n: int) -> np.ndarray:
    """Forward matrix with the ``1/N`` normalization: ``c = F @ f``."""
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(j, j) / n) / n


def dense_forward(a: np.ndarray, dim: int) -> np.ndarray:
    n = a.shape[-1]
    F = dft_matrix(n)
    out = a.astype(complex)
    for ax in range(a.ndim - dim, a.ndim):
        out = np.moveaxis(np.einsum("ij,j...->i...", F, np.moveaxis(out, ax, 0)), 0, ax)
    return out


def dense_inverse(c: np.ndarray, dim: int) -> np.ndarray:
    n = c.shape[-1]
    j = np.arange(n)
    G = np.exp(2j * np.pi * np.outer(j, j) / n)
    out = c.astype(complex)
    for ax in range(c.ndim - dim, c.ndim):
        out = np.moveaxis(np.einsum("ij,j...->i...", G, np.moveaxis(out, ax, 0)), 0, ax)
    return out


def lattice_indices(n: int) -> np.ndarray:
    """Signed integer modes in FFT order, Nyquist stored as ``-n/2``."""
    m = np.arange(n)
    return np.where(m < n // 2, m, m - n)


def hermitian_part(sym: np.ndarray, dim: int) -> np.ndarray:
    """Average ``sym[k]`` with ``conj(sym[-k mod N])`` by explicit index loops."""
    n = sym.shape[-1]
    out = np.empty_like(sym, dtype=complex)
    for idx in itertools.product(range(n), repeat=dim):
        neg = tuple((-i) % n for i in idx)
        out[idx] = 0.5 * (sym[idx] + np.conj(sym[neg]))
    return out


def dense_multiplier(sym_lattice: np.ndarray, a: np.ndarray, dim: int) -> np.ndarray:
    """Apply a lattice symbol through dense transforms; real part returned."""
    return np.real(dense_inverse(hermitian_part(sym_lattice, dim) * dense_forward(a, dim), dim))


def lattice_frequencies(n: int, L: float, dim: int) -> tuple:
    k = 2 * np.pi * lattice_indices(n) / L
    return tuple(np.meshgrid(*([k] * dim), indexing="ij"))
