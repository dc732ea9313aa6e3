import math

import numpy as np
import pytest

from gyropic.fields import (
    ConstantB,
    DiskConfinementB,
    FieldDomainError,
    ParabolicB,
    electric_drift,
    energy_drift_rate,
    energy_surplus,
    energy_surplus_many,
    full_drift,
    make_model,
    perp,
)

ALL_MODELS = ["ParabolicB_NoE", "ParabolicB_LinearE", "DiskConfinementB", "ConstantB"]


def test_perp_examples():
    assert perp((1.0, 0.0)) == (0.0, 1.0)
    assert perp((0.0, 0.0)) == (0.0, 0.0)
    assert perp((3.0, -4.0)) == (4.0, 3.0)


def test_perp_involution_and_isometry():
    rng = np.random.default_rng(3)
    for _ in range(200):
        v = tuple(rng.normal(0, 10, 2))
        pp = perp(perp(v))
        assert pp == (-v[0], -v[1])
        assert math.hypot(*perp(v)) == pytest.approx(math.hypot(*v), rel=1e-15)


class TestEnergySurplus:
    def test_zero_on_constraint(self):
        # exactly zero whenever e = |w|^2/2
        rng = np.random.default_rng(5)
        for _ in range(500):
            w = tuple(rng.normal(0, 3, 2))
            e = 0.5 * (w[0] ** 2 + w[1] ** 2)
            assert energy_surplus(e, w) == 0.0

    def test_limit_small_w(self):
        assert energy_surplus(2.0, (0.0, 0.0)) == 2.0
        assert energy_surplus(2.0, (1e-12, 0.0)) == pytest.approx(2.0, rel=1e-20)

    def test_pinned_values(self):
        assert energy_surplus(1.0, (1.0, 1.0)) == 0.0
        assert energy_surplus(2.0, (math.sqrt(2.0), 0.0)) == pytest.approx(2.0 / 3.0, rel=1e-14)
        assert energy_surplus(1.0, (2.0, 0.0)) == 0.0

    def test_bounds_random(self):
        rng = np.random.default_rng(11)
        e = np.abs(rng.normal(0, 5, 5000))
        w = rng.normal(0, 5, (5000, 2))
        vals = energy_surplus_many(e, w)
        assert np.all(vals >= 0.0)
        assert np.all(vals <= e)
        for k in range(0, 5000, 97):
            assert vals[k] == energy_surplus(e[k], tuple(w[k]))

    def test_total_outside_positive_energies(self):
        # negative e and degenerate denominators return 0, never raise
        assert energy_surplus(-1.0, (0.0, 0.0)) == 0.0
        assert energy_surplus(-0.5, (1.0, 1.0)) == 0.0
        assert energy_surplus(0.0, (0.0, 0.0)) == 0.0
        assert energy_surplus(1e-320, (0.0, 0.0)) == 0.0


@pytest.mark.parametrize("name", ALL_MODELS)
def test_grad_log_b_matches_finite_differences(name):
    """Central differences of ln b converge at second order to grad_log_b."""
    model = make_model(name)
    pts = [(1.3, 0.7), (-2.1, 3.4), (0.4, -1.9)]
    for x in pts:
        gl = model.grad_log_b(0.0, x)
        errs = []
        for h in (1e-3, 5e-4):
            fd = (
                (math.log(model.b(0.0, (x[0] + h, x[1]))) - math.log(model.b(0.0, (x[0] - h, x[1])))) / (2 * h),
                (math.log(model.b(0.0, (x[0], x[1] + h))) - math.log(model.b(0.0, (x[0], x[1] - h)))) / (2 * h),
            )
            errs.append(math.hypot(fd[0] - gl[0], fd[1] - gl[1]))
        if errs[0] > 1e-12:
            assert 3.5 <= errs[0] / errs[1] <= 4.5
        else:
            assert errs[1] <= 1e-12


@pytest.mark.parametrize("name", ALL_MODELS)
def test_scalar_and_array_evaluations_agree(name):
    model = make_model(name)
    rng = np.random.default_rng(2)
    X = rng.normal(0, 2, (64, 2))
    b = model.b_many(0.0, X)
    gl = model.grad_log_b_many(0.0, X)
    E = model.E_many(0.0, X)
    for k in range(64):
        x = tuple(X[k])
        assert b[k] == pytest.approx(model.b(0.0, x), rel=1e-15)
        assert gl[k] == pytest.approx(model.grad_log_b(0.0, x), rel=1e-15, abs=1e-300)
        assert E[k] == pytest.approx(model.E(0.0, x), rel=1e-15, abs=1e-300)


def test_b_floor_on_experiment_domains():
    par = make_model("ParabolicB_NoE")
    disk = make_model("DiskConfinementB")
    rng = np.random.default_rng(9)
    X = rng.uniform(-6, 6, (2000, 2))
    assert np.all(par.b_many(0.0, X) >= par.b_floor)
    inside = X[np.hypot(X[:, 0], X[:, 1]) <= 6.0]
    assert np.all(disk.b_many(0.0, inside) >= disk.b_floor)


def test_disk_model_values_and_domain():
    disk = DiskConfinementB()
    assert disk.b(0.0, (0.0, 0.0)) == pytest.approx(1.0)
    assert disk.b(0.0, (6.0, 0.0)) == pytest.approx(10.0 / 8.0)
    with pytest.raises(FieldDomainError):
        disk.b(0.0, (10.0, 0.5))
    with pytest.raises(FieldDomainError):
        disk.grad_log_b(0.0, (11.0, 0.0))
    with pytest.raises(FieldDomainError):
        disk.b_many(0.0, np.array([[0.0, 0.0], [10.5, 0.0]]))


def test_electric_drift_examples():
    none = make_model("ParabolicB_NoE")
    assert electric_drift(none, 0.0, (1.0, 2.0)) == (0.0, 0.0)

    lin = make_model("ParabolicB_LinearE")
    F = electric_drift(lin, 0.0, (1.0, 2.0))
    assert F[0] == pytest.approx(-4.0 / 3.0, rel=1e-15)
    assert F[1] == 0.0
    # on the x1 = 0 axis b = 1 so F = (-y, 0)
    F = electric_drift(lin, 0.0, (0.0, 3.7))
    assert F == pytest.approx((-3.7, 0.0))


def test_full_drift_no_field_formula():
    """Grad-B drift of b = 1 + alpha*x1^2 is (0, 2*alpha*g*x1/b^2)."""
    model = make_model("ParabolicB_NoE")
    for g in (0.5, 30.5):
        U = full_drift(model, 0.0, (5.0, 4.0), g)
        assert U[0] == 0.0
        assert U[1] == pytest.approx(5.0 * g / 182.25, rel=1e-14)


def test_full_drift_with_field_formula():
    """Combined drift matches 1/(1+a x^2) * (-y, 2 a e x/(1+a x^2))."""
    model = make_model("ParabolicB_LinearE")
    U = full_drift(model, 0.0, (1.0, 2.0), 3.0)
    assert U[0] == pytest.approx(-4.0 / 3.0, rel=1e-14)
    assert U[1] == pytest.approx(4.0 / 3.0, rel=1e-14)


def test_full_drift_zero_g_is_electric_drift():
    model = make_model("ParabolicB_LinearE")
    rng = np.random.default_rng(4)
    for _ in range(50):
        x = tuple(rng.normal(0, 3, 2))
        assert full_drift(model, 0.0, x, 0.0) == electric_drift(model, 0.0, x)


def test_energy_drift_rate():
    lin = make_model("ParabolicB_LinearE")
    assert energy_drift_rate(lin, 0.0, (1.0, 2.0), 3.0) == pytest.approx(-8.0 / 3.0, rel=1e-14)
    # zero field or homogeneous b kill the rate
    none = make_model("ParabolicB_NoE")
    assert energy_drift_rate(none, 0.0, (1.0, 2.0), 3.0) == 0.0
    const = ConstantB()
    assert energy_drift_rate(const, 0.0, (1.0, 2.0), 3.0) == 0.0


def test_make_model_rejects_unknown():
    with pytest.raises(ValueError, match="unknown field model"):
        make_model("Dipole")
    with pytest.raises(ValueError):
        ParabolicB(alpha=-1.0)
