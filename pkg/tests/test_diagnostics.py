import math

import numpy as np
import pytest

from gyropic.diagnostics import (
    adiabatic_invariant,
    energy_parts,
    l1_trajectory_error,
    oscillation_observables,
    total_energy,
)
from gyropic.fields import ConstantB, DiskConfinementB, make_model
from gyropic.integrators import GuidingCenterState, ParticleState, step_limit
from gyropic.pic import Grid, ParticleEnsemble


def make_ensemble(x, e, weight):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return ParticleEnsemble(x, np.asarray(e, dtype=float), np.zeros_like(x), np.asarray(weight, dtype=float))


class TestL1Error:
    def test_identical(self):
        a = np.random.default_rng(1).normal(0, 1, (20, 2))
        assert l1_trajectory_error(a, a.copy(), 0.1, 2.0) == 0.0

    def test_constant_offset_series(self):
        # two scalar series differing by 1: (dt/T) * (N+1)
        T, dt = 2.0, 0.1
        n = int(T / dt)
        a = np.zeros(n + 1)
        b = np.ones(n + 1)
        assert l1_trajectory_error(a, b, dt, T) == pytest.approx(1.0 + dt / T, rel=1e-14)

    def test_homogeneity(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0, 1, (30, 2))
        b = rng.normal(0, 1, (30, 2))
        full = l1_trajectory_error(a, b, 0.05, 1.0)
        halved = l1_trajectory_error(a, (a + b) / 2.0, 0.05, 1.0)
        assert halved == pytest.approx(full / 2.0, rel=1e-12)

    def test_pseudometric(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b, c = rng.normal(0, 1, (3, 12, 2))
            dab = l1_trajectory_error(a, b, 0.1, 1.0)
            dba = l1_trajectory_error(b, a, 0.1, 1.0)
            dac = l1_trajectory_error(a, c, 0.1, 1.0)
            dcb = l1_trajectory_error(c, b, 0.1, 1.0)
            assert dab == dba
            assert dab <= dac + dcb + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes differ"):
            l1_trajectory_error(np.zeros(3), np.zeros(4), 0.1, 1.0)


class TestTotalEnergy:
    def test_single_particle_no_field(self):
        grid = Grid(nx=17)
        ens = make_ensemble([(0.0, 0.0)], [3.0], [1.0])
        assert total_energy(ens, grid) == 3.0

    def test_kinetic_part_of_sampled_data(self):
        from gyropic.pic import InitialDataSpec, sample_initial

        ens = sample_initial(InitialDataSpec(), 10**5, seed=11)
        grid = Grid(nx=17)
        kin, fld = energy_parts(ens, grid)
        assert fld == 0.0
        assert abs(kin - 2.0) <= 0.05

    def test_uniform_field_quadrature(self):
        grid = Grid(nx=33)
        c = 0.75
        grid.E_grid[:, :, 0] = c
        ens = make_ensemble([(0.0, 0.0)], [0.0], [1.0])
        expect = 0.5 * c * c * grid.h**2 * int(np.count_nonzero(grid.inside))
        assert total_energy(ens, grid) == pytest.approx(expect, rel=1e-14)

    def test_linear_in_weights(self):
        grid = Grid(nx=17)
        rng = np.random.default_rng(4)
        x = rng.uniform(-3, 3, (40, 2))
        e = np.abs(rng.normal(2, 1, 40))
        w = rng.uniform(0, 1, 40)
        a = total_energy(make_ensemble(x, e, w), grid)
        b = total_energy(make_ensemble(x, e, 2.0 * w), grid)
        assert b == pytest.approx(2.0 * a, rel=1e-13)


class TestAdiabaticInvariant:
    def test_unit_field_equals_kinetic(self):
        ens = make_ensemble([(1.0, 0.5), (-2.0, 0.2)], [1.5, 2.5], [0.25, 0.75])
        grid = Grid(nx=17)
        kin, _ = energy_parts(ens, grid)
        assert adiabatic_invariant(ens, ConstantB(1.0), 0.0) == pytest.approx(kin, rel=1e-14)

    def test_single_particle(self):
        ens = make_ensemble([(1.0, 0.0)], [3.0], [1.0])
        assert adiabatic_invariant(ens, ConstantB(1.5), 0.0) == pytest.approx(2.0, rel=1e-14)

    def test_disk_center_value(self):
        ens = make_ensemble([(0.0, 0.0)], [3.0], [1.0])
        assert adiabatic_invariant(ens, DiskConfinementB(), 0.0) == pytest.approx(3.0, rel=1e-14)

    def test_excludes_outside_square(self):
        ens = make_ensemble([(0.0, 0.0), (7.0, 0.0)], [3.0, 5.0], [0.5, 0.5])
        mu = adiabatic_invariant(ens, DiskConfinementB(), 0.0, domain_half_width=6.0)
        assert mu == pytest.approx(1.5, rel=1e-14)

    def test_linear_in_weights(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-3, 3, (30, 2))
        e = np.abs(rng.normal(2, 1, 30))
        w = rng.uniform(0, 1, 30)
        model = DiskConfinementB()
        a = adiabatic_invariant(make_ensemble(x, e, w), model, 0.0)
        b = adiabatic_invariant(make_ensemble(x, e, 3.0 * w), model, 0.0)
        assert b == pytest.approx(3.0 * a, rel=1e-13)


class TestOscillationObservables:
    def test_axis_aligned(self):
        s = ParticleState((0.0, 0.0), 0.5, (1.0, 0.0))
        assert oscillation_observables(s) == pytest.approx((0.0, 1.0))

    def test_diagonal(self):
        s = ParticleState((0.0, 0.0), 1.0, (1.0, 1.0))
        q1, q2 = oscillation_observables(s)
        assert q1 == pytest.approx(2.0, rel=1e-14)
        assert q2 == pytest.approx(0.0, abs=1e-14)

    def test_norm_identity(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            w = tuple(rng.normal(0, 2, 2))
            e = 0.5 * (w[0] ** 2 + w[1] ** 2)
            if e == 0.0:
                continue
            q1, q2 = oscillation_observables(ParticleState((0.0, 0.0), e, w))
            v2 = 2.0 * e
            assert q1 * q1 + q2 * q2 == pytest.approx(v2 * v2, rel=1e-12)


def test_g_over_b_invariant_along_limit_trajectories():
    """Static b and curl-free E: g/b(Y) drifts at O(dt^order) per unit time."""
    model = make_model("ParabolicB_LinearE")
    for order in (1, 2, 3):
        drifts = []
        for dt in (0.02, 0.01):
            gc = GuidingCenterState((5.0, 4.0), 30.5)
            v0 = gc.g / model.b(0.0, gc.y)
            worst = 0.0
            for k in range(int(round(1.0 / dt))):
                gc = step_limit(gc, k * dt, dt, order, model)
                worst = max(worst, abs(gc.g / model.b(0.0, gc.y) - v0))
            drifts.append(worst / abs(v0))
        ratio = drifts[0] / drifts[1]
        assert 2.0 ** order / 1.5 <= ratio <= 2.0 ** order * 1.5, f"order {order}: ratio {ratio:.2f}"
