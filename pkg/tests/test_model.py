from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfwave import oracles
from halfwave.dyadic import besov_norm
from halfwave.errors import BumpTooLarge, ConstraintViolated, DegenerateBase, NormalizationFailure
from halfwave.evolve import integrate_waveform
from halfwave.model import (
    BumpProfile,
    SphereField,
    WaveState,
    _sphere_from,
    bump_perturbation,
    commutator_group,
    cross,
    cross_triple,
    cross_triple_expanded,
    dot,
    dt_x_rhs,
    dt_x_rhs_array,
    energy,
    halfwave_rhs,
    incompatible_data,
    make_initial_data,
    relative_field,
    rotate,
    source_groups,
    tangent_projection,
    waveform_rhs,
    x_energy,
    x_energy_array,
    x_functional,
)
from halfwave.spectral_grid import GridSpec, RealField

from conftest import philox

E1, E2, E3 = np.eye(3)


def random_rotation(seed):
    q, r = np.linalg.qr(philox(seed).standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    return q if np.linalg.det(q) > 0 else -q


class TestSphereField:
    def test_constant(self):
        u = SphereField.constant(GridSpec(1, 16), (0.6, 0.0, 0.8))
        assert np.allclose(u.samples[:, 3], [0.6, 0.0, 0.8])

    def test_constraint_enforced(self):
        g = GridSpec(1, 16)
        with pytest.raises(ConstraintViolated):
            SphereField(RealField(g, 1.1 * SphereField.constant(g).samples))

    def test_components(self):
        g = GridSpec(1, 16)
        with pytest.raises(ValueError):
            SphereField(RealField(g, np.ones((2, 16))))


class TestHalfwaveRhs:
    def test_constant_is_static(self):
        u = SphereField.constant(GridSpec(2, 16))
        assert np.abs(halfwave_rhs(u).samples).max() == 0.0

    def test_orthogonal_to_u(self, bump_2d):
        u = bump_2d.u
        assert np.abs(dot(u.samples, halfwave_rhs(u).samples)).max() <= 1e-14

    def test_great_circle(self):
        g = GridSpec(1, 64)
        th = 0.3 * np.sin(g.coords[0])
        a = np.stack([np.cos(th), np.sin(th), 0 * th])
        u = SphereField(RealField(g, a), (1.0, 0.0, 0.0))
        r = halfwave_rhs(u).samples
        assert np.abs(dot(a, r)).max() <= 1e-15

    def test_dense_oracle(self, bump_1d_128):
        u = bump_1d_128.u
        g = u.grid
        k = np.abs(oracles.lattice_frequencies(g.n, g.L, 1)[0])
        lu = np.array([oracles.dense_multiplier(k, c, 1) for c in u.samples])
        ref = cross(u.samples, lu)
        out = halfwave_rhs(u).samples
        assert np.abs(out - ref).max() / np.abs(ref).max() <= 1e-12

    def test_constraint_check(self):
        g = GridSpec(1, 16)
        u = SphereField(RealField(g, 1.0001 * SphereField.constant(g).samples), constraint_tol=1e-3)
        with pytest.raises(ConstraintViolated):
            halfwave_rhs(u)


class TestTangentProjection:
    def setup_method(self):
        self.g = GridSpec(1, 64)
        rng = philox(3)
        b = rng.standard_normal((3, 64))
        self.base = RealField(self.g, b / np.sqrt(dot(b, b)) * (1 + 0.1 * rng.random(64)))
        self.v = RealField(self.g, rng.standard_normal((3, 64)))

    def test_parallel_removed(self):
        out = tangent_projection(self.base, RealField(self.g, 2.5 * self.base.samples))
        assert np.abs(out.samples).max() < 1e-14

    def test_orthogonal_kept(self):
        w = cross(self.base.samples, self.v.samples)
        out = tangent_projection(self.base, RealField(self.g, w))
        assert np.abs(out.samples - w).max() < 1e-14

    def test_output_orthogonal(self):
        out = tangent_projection(self.base, self.v).samples
        assert np.abs(dot(out, self.base.samples)).max() <= 1e-12

    def test_idempotent(self):
        once = tangent_projection(self.base, self.v)
        twice = tangent_projection(self.base, once)
        assert np.abs(twice.samples - once.samples).max() <= 1e-13

    def test_self_adjoint(self):
        w = RealField(self.g, philox(4).standard_normal((3, 64)))
        lhs = dot(tangent_projection(self.base, self.v).samples, w.samples)
        rhs = dot(self.v.samples, tangent_projection(self.base, w).samples)
        assert np.abs(lhs - rhs).max() < 1e-13

    def test_degenerate(self):
        with pytest.raises(DegenerateBase):
            tangent_projection(RealField(self.g, 0.4 * self.base.samples / 1.1), self.v)


class TestCrossAlgebra:
    def test_hand_cases(self):
        assert np.all(cross_triple(E1, E1, E1) == 0)
        assert np.allclose(cross_triple(E1, E2, E1), E2)
        assert np.allclose(cross_triple_expanded(E1, E2, E1), E2)

    def test_random_triples(self):
        rng = philox(5)
        a, b, c = (rng.uniform(-1, 1, (3, 10**6)) for _ in range(3))
        assert np.abs(cross_triple(a, b, c) - cross_triple_expanded(a, b, c)).max() <= 1e-14

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=9, max_size=9))
    def test_identity_property(self, v):
        a, b, c = np.array(v).reshape(3, 3)
        assert np.abs(cross_triple(a, b, c) - cross_triple_expanded(a, b, c)).max() <= 1e-15


class TestWaveformRhs:
    def test_constant_zero(self):
        g = GridSpec(2, 16)
        st_ = WaveState(SphereField.constant(g), RealField(g, np.zeros((3,) + g.shape)))
        assert np.all(waveform_rhs(st_).samples == 0.0)

    def test_groups_sum(self, bump_1d):
        groups = source_groups(bump_1d)
        total = groups["wave_maps"] + groups["projected"] + groups["commutator"]
        assert np.array_equal(total.samples, waveform_rhs(bump_1d).samples)

    def test_commutator_single_modes(self):
        # u = cos(kx) e1 + sin(qx) e2; closed form from |xi| on each factor
        g = GridSpec(1, 64)
        x = g.coords[0]
        k, q = 3, 5
        ck, sq = np.cos(k * x), np.sin(q * x)
        u = RealField(g, np.stack([ck, sq, 0 * x]))
        f = (q - k) * 0.5 * ((q + k) * np.sin((q + k) * x) + (q - k) * np.sin((q - k) * x))
        h = ck * sq * (q * q - k * k)
        expected = (f - h) * np.stack([sq, -ck, 0 * x])
        assert np.abs(commutator_group(u).samples - expected).max() < 1e-12

    def test_constraint_checked(self):
        g = GridSpec(1, 16)
        u = SphereField(RealField(g, 1.001 * SphereField.constant(g).samples), constraint_tol=1e-2)
        with pytest.raises(ConstraintViolated):
            waveform_rhs(WaveState(u, RealField(g, np.zeros((3, 16)))))


class TestEnergy:
    def test_constant(self):
        assert energy(SphereField.constant(GridSpec(1, 32))) == 0.0

    def test_single_mode(self):
        g = GridSpec(1, 64, box_length=3.0)
        k = 2 * np.pi * 4 / g.L
        a = np.zeros((3, 64))
        a[1] = 0.7 * np.cos(k * g.coords[0])
        assert energy(RealField(g, a)) == pytest.approx(k * 0.49 * g.L / 2, rel=1e-13)

    def test_dense_oracle(self, bump_1d_128):
        u = bump_1d_128.u
        g = u.grid
        k = np.abs(oracles.lattice_frequencies(g.n, g.L, 1)[0])
        q = np.array([oracles.dense_multiplier(np.sqrt(k), c, 1) for c in u.samples])
        assert energy(u) == pytest.approx(g.cell_volume * (q * q).sum(), rel=1e-11)

    def test_rotation_invariant(self, bump_2d):
        R = random_rotation(7)
        rotated = RealField(bump_2d.grid, rotate(bump_2d.u.samples, R))
        assert energy(rotated) == pytest.approx(energy(bump_2d.u), rel=1e-12)


class TestXFunctional:
    def test_compatible_data(self, bump_1d):
        assert x_energy(bump_1d) <= 1e-20
        assert np.abs(x_functional(bump_1d).samples).max() == 0.0

    def test_incompatible_data(self, bump_1d):
        bad = incompatible_data(bump_1d)
        hw = halfwave_rhs(bump_1d.u)
        assert x_energy(bad) == pytest.approx(0.5 * energy(hw), rel=1e-14)
        assert x_energy(bad) > 0

    def test_quadratic_in_offset(self, bump_1d):
        g = bump_1d.grid
        w = np.stack([np.sin(3 * g.coords[0])] * 3) * 1e-3
        e1 = x_energy_array(g, bump_1d.u.samples, bump_1d.ut.samples + w)
        e2 = x_energy_array(g, bump_1d.u.samples, bump_1d.ut.samples + 2 * w)
        assert e2 / e1 == pytest.approx(4.0, rel=0.01)

    def test_nonnegative(self, bump_1d):
        assert x_energy(incompatible_data(bump_1d)) >= 0


class TestDtX:
    def test_zero_for_compatible(self, bump_1d):
        assert np.abs(dt_x_rhs(bump_1d).samples).max() < 1e-15

    def test_constant_u(self):
        g = GridSpec(1, 32)
        u = SphereField.constant(g)
        v = np.zeros((3, 32))
        v[0] = 0.3
        out = dt_x_rhs(WaveState(u, RealField(g, v))).samples
        expected = -u.samples * 0.09
        assert np.abs(out - expected).max() < 1e-15

    def test_matches_trajectory_finite_difference(self, bump_1d_128):
        data = incompatible_data(bump_1d_128)
        g = data.grid
        errs = []
        for h in (4e-3, 2e-3, 1e-3):
            slab = integrate_waveform(data, g, T=2 * h, dt=h, diagnostics=False)
            X = [r - c for r, c in zip(slab.rates, [cross(f, g.frac_lap(0.5, f)) for f in slab.frames])]
            fd = (X[2] - X[0]) / (2 * h)
            errs.append(np.abs(fd - dt_x_rhs_array(g, slab.frames[1], slab.rates[1])).max())
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert orders.min() >= 1.9


class TestInitialData:
    def test_zero_epsilon(self):
        g = GridSpec(1, 64)
        d = make_initial_data(BumpProfile(), 0.0, g)
        assert np.all(d.u.samples == np.array([0, 0, 1.0])[:, None])
        assert np.all(d.ut.samples == 0)

    def test_besov_size(self, bump_1d):
        assert besov_norm(2.0, relative_field(bump_1d.u)) == pytest.approx(0.1, rel=0.02)

    def test_constant_outside_support(self, bump_1d):
        _, inside, p = bump_perturbation(BumpProfile(), bump_1d.grid)
        assert np.all(bump_1d.u.samples[:, ~inside] == p[:, None])

    def test_tangent_velocity(self, bump_2d):
        assert bump_2d.tangency_defect() <= 1e-15

    def test_too_large(self):
        with pytest.raises(BumpTooLarge):
            make_initial_data(BumpProfile(radius=1.0), 0.1, GridSpec(1, 64))

    def test_normalization_guard(self):
        # generated perturbations are tangent to p, so |p + A phi| >= 1; probe the guard directly
        g = GridSpec(1, 32)
        p = np.array([0.0, 0.0, 1.0])
        inside = np.ones(32, dtype=bool)
        phi = -np.broadcast_to(p[:, None], (3, 32))
        with pytest.raises(NormalizationFailure):
            _sphere_from(p, phi, inside, 0.8)

    def test_large_epsilon_stays_on_sphere(self):
        d = make_initial_data(BumpProfile(), 1.0, GridSpec(1, 128))
        assert np.abs(dot(d.u.samples, d.u.samples) - 1).max() < 1e-14

    def test_seed_changes_direction(self):
        g = GridSpec(1, 64)
        a = make_initial_data(BumpProfile(direction_seed=1), None, g).u.samples
        b = make_initial_data(BumpProfile(direction_seed=2), None, g).u.samples
        assert not np.allclose(a, b)

    def test_from_dict(self):
        prof = BumpProfile.from_dict({"center": [1.0], "radius": 0.5, "direction_seed": 3, "epsilon": 0.2})
        assert prof.center == (1.0,) and prof.epsilon == 0.2

    def test_rhs_rotation_equivariant(self, bump_1d_128):
        R = random_rotation(9)
        g = bump_1d_128.grid
        ru = SphereField(RealField(g, rotate(bump_1d_128.u.samples, R)), R @ bump_1d_128.u.base_point)
        lhs = halfwave_rhs(ru).samples
        rhs = rotate(halfwave_rhs(bump_1d_128.u).samples, R)
        assert np.abs(lhs - rhs).max() < 1e-14
