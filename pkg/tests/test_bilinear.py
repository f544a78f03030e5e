from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfwave.bilinear import (
    BilinearSymbol,
    annulus_extension,
    apply_bilinear,
    apply_via_expansion,
    commutator_ratio,
    commutator_sqrt,
    commutator_sqrt_lap,
    expand_symbol,
    get_symbol,
    random_shell_field,
    sqrt_commutator_symbol,
    unit_symbol,
)
from halfwave.dyadic import lp_project, shell
from halfwave.errors import GridTooLarge, QuadratureFailure
from halfwave.spectral_grid import GridSpec, RealField

from conftest import philox

GRID = GridSpec(1, 64, box_length=2.0 * np.pi * 16)
K1, K2 = -4, 0


def rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


@pytest.fixture
def pair():
    rng = philox(8)
    return random_shell_field(GRID, K1, rng), random_shell_field(GRID, K2, rng)


class TestExtension:
    def test_plateau_and_support(self):
        assert np.all(annulus_extension(np.linspace(0.5, 2.0, 31)) == 1.0)
        assert np.all(annulus_extension(np.array([0.0, 0.2, 0.25, 3.0, 4.0])) == 0.0)
        mid = annulus_extension(np.array([0.3, 2.5]))
        assert np.all((mid > 0) & (mid < 1))


class TestDirect:
    def test_unit_is_product(self, pair):
        u, v = pair
        out = apply_bilinear(unit_symbol(K1, K2, 2.5), u, v).samples
        expected = 2.5 * lp_project(K1, u).samples * lp_project(K2, v).samples
        assert np.abs(out - expected).max() <= 1e-13 * np.abs(expected).max()

    def test_single_modes(self):
        x = GRID.coords[0]
        a, b = 1.0 / 16, 1.0
        u = RealField(GRID, np.cos(a * x)[None])
        v = RealField(GRID, np.cos(b * x)[None])
        sym = sqrt_commutator_symbol(K1, K2)
        w = shell(a / 2.0**K1) * shell(b / 2.0**K2)
        expected = np.zeros_like(x)
        for s1 in (1, -1):
            for s2 in (1, -1):
                xi, eta = s1 * a, s2 * b
                m = shell(abs(xi + eta)) * (abs(xi + eta) - abs(eta))
                expected = expected + 0.25 * w * np.real(m * np.exp(1j * (xi + eta) * x))
        out = apply_bilinear(sym, u, v).samples[0]
        assert np.abs(out - expected).max() <= 1e-14

    def test_vector_inputs_are_dotted(self):
        rng = philox(3)
        u = random_shell_field(GRID, K1, rng, components=3)
        v = random_shell_field(GRID, K2, rng, components=3)
        sym = sqrt_commutator_symbol(K1, K2)
        total = sum(
            apply_bilinear(sym, RealField(GRID, u.samples[c : c + 1]), RealField(GRID, v.samples[c : c + 1])).samples
            for c in range(3)
        )
        assert rel(apply_bilinear(sym, u, v).samples, total) <= 1e-13

    @pytest.mark.parametrize("lap", [False, True])
    def test_commutator_has_the_symbol(self, pair, lap):
        u, v = pair
        name = "sqrt_lap_commutator" if lap else "sqrt_commutator"
        op = commutator_sqrt_lap if lap else commutator_sqrt
        direct = apply_bilinear(get_symbol(name, K1, K2), u, v).samples
        assert rel(op(K1, u, v, K2).samples, direct) <= 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
    def test_bilinear(self, a, b, seed):
        rng = philox(seed)
        u1, u2 = (random_shell_field(GRID, K1, rng) for _ in range(2))
        v = random_shell_field(GRID, K2, rng)
        sym = sqrt_commutator_symbol(K1, K2)
        lhs = apply_bilinear(sym, RealField(GRID, a * u1.samples + b * u2.samples), v).samples
        rhs = a * apply_bilinear(sym, u1, v).samples + b * apply_bilinear(sym, u2, v).samples
        assert np.abs(lhs - rhs).max() <= 1e-12 * (1 + np.abs(rhs).max())

    def test_grid_too_large(self):
        g = GridSpec(1, 128)
        f = RealField(g, np.zeros((1, 128)))
        with pytest.raises(GridTooLarge):
            apply_bilinear(unit_symbol(0), f, f)

    def test_component_mismatch(self):
        f1 = RealField(GRID, np.zeros((1, 64)))
        f3 = RealField(GRID, np.zeros((3, 64)))
        with pytest.raises(ValueError):
            apply_bilinear(unit_symbol(K1), f1, f3)


def exponential_symbol(m0: int, p0: int) -> BilinearSymbol:
    return BilinearSymbol(
        lambda xi, eta: np.exp(1j * (2.0**-K1 * xi[0] * m0 + 2.0**-K2 * eta[0] * p0)),
        (K1, K2),
        name="shift",
        periodic=True,
    )


class TestExpansion:
    def test_constant(self, pair):
        exp = expand_symbol(unit_symbol(K1, K2, 1.5), M=4)
        assert exp.coefficient(0, 0) == pytest.approx(1.5, abs=1e-15)
        assert exp.abs_sum() == pytest.approx(1.5, abs=1e-12)
        u, v = pair
        assert rel(apply_via_expansion(exp, u, v).samples, apply_bilinear(unit_symbol(K1, K2, 1.5), u, v).samples) <= 1e-12

    def test_single_exponential(self, pair):
        sym = exponential_symbol(2, -3)
        exp = expand_symbol(sym, M=4)
        assert exp.coefficient(2, -3) == pytest.approx(1.0, abs=1e-13)
        assert exp.abs_sum() == pytest.approx(1.0, abs=1e-11)
        u, v = pair
        assert rel(apply_via_expansion(exp, u, v).samples, apply_bilinear(sym, u, v).samples) <= 1e-12

    def test_error_decreases_with_order(self, pair):
        u, v = pair
        sym = sqrt_commutator_symbol(K1, K2)
        direct = apply_bilinear(sym, u, v).samples
        errs = [rel(apply_via_expansion(expand_symbol(sym, M), u, v).samples, direct) for M in (4, 8, 16)]
        assert errs[0] > errs[1] > errs[2]

    def test_table_and_sup(self):
        exp = expand_symbol(exponential_symbol(1, 1), M=2)
        rows = exp.table(threshold=1e-8)
        assert len(rows) == 1 and rows[0]["m"] == [1] and rows[0]["p"] == [1]
        assert exp.sup_coefficient == pytest.approx(1.0)

    def test_order_validation(self):
        with pytest.raises(ValueError):
            expand_symbol(unit_symbol(K1), M=1)
        with pytest.raises(ValueError):
            expand_symbol(unit_symbol(K1), M=8, quadrature=16)

    def test_rough_symbol_rejected(self):
        step = BilinearSymbol(lambda xi, eta: np.sign(xi[0]) + 0 * eta[0], (K1, K2), periodic=True)
        with pytest.raises(QuadratureFailure):
            expand_symbol(step, M=4)

    def test_dimension_mismatch(self, pair):
        u, v = pair
        exp = expand_symbol(unit_symbol(K1, K2), M=2, dim=2)
        with pytest.raises(ValueError):
            apply_via_expansion(exp, u, v)


class TestRegistry:
    def test_lookup(self):
        sym = get_symbol("sqrt_commutator", -2, 1)
        assert sym.support_shells == (-2, 1) and sym.gain_exponent == -2.0

    def test_unknown(self):
        with pytest.raises(KeyError):
            get_symbol("nope", 0)


class TestCommutatorRatio:
    def test_zero_input(self):
        g = GridSpec(1, 64, box_length=2.0 * np.pi * 16)
        z = RealField(g, np.zeros((1, 64)))
        assert commutator_ratio(K1, z, z, K2) == 0.0

    def test_scale_invariant(self, pair):
        u, v = pair
        r = commutator_ratio(K1, u, v, K2)
        r2 = commutator_ratio(K1, RealField(GRID, 3 * u.samples), RealField(GRID, -2 * v.samples), K2)
        assert r2 == pytest.approx(r, rel=1e-12)
