"""Error norms and conserved-quantity functionals.

Trajectory errors use the time-averaged discrete L1 norm
(dt/T) * sum_n |a_n - b_n|; ensemble functionals are plain weighted
reductions, restricted to particles still inside the square domain so
escaped particles never contribute (their count is reported separately
by the harness).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FieldModel
from .integrators import ParticleState
from .pic import Grid, ParticleEnsemble, reconstruct_velocity


@dataclass
class ErrorReport:
    """Trajectory error norms of one (epsilon, dt, order) sweep cell.

    Reference errors compare against the fine RK4 orbit of the stiff
    system (w scaled by 1/epsilon); limit errors compare against the
    drift system's (Y, g) and drift velocity.  None marks a column that
    could not be computed for this cell.
    """

    epsilon: float
    dt: float
    order: int
    x_err_ref: float | None = None
    w_err_ref_scaled: float | None = None
    e_err_ref: float | None = None
    x_err_limit: float | None = None
    w_err_drift: float | None = None
    e_err_limit: float | None = None
    status: str = "ok"


def l1_trajectory_error(a, b, dt: float, T: float) -> float:
    """Time-averaged L1 distance of two discrete trajectories.

    Accepts (M,) scalar series or (M, 2) vector series sampled at the
    same M = N_T + 1 discrete times; vector entries are compared in the
    Euclidean norm.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"trajectory shapes differ: {a.shape} vs {b.shape}")
    d = a - b
    if d.ndim == 1:
        norms = np.abs(d)
    elif d.ndim == 2:
        norms = np.hypot(d[:, 0], d[:, 1])
    else:
        raise ValueError("expected (M,) or (M, 2) series")
    return dt / T * float(np.sum(norms))


def energy_parts(particles: ParticleEnsemble, grid: Grid) -> tuple[float, float]:
    """(kinetic, field) energy: sum w_k e_k and h^2/2 * sum_inside |E|^2.

    The kinetic sum runs over the whole ensemble: particles gyrating
    outside the grid square still belong to the system (they feel no
    electric field there, so their energy is exactly held).
    """
    kinetic = float(np.sum(particles.weight * particles.e))
    E2 = grid.E_grid[:, :, 0] ** 2 + grid.E_grid[:, :, 1] ** 2
    fld = 0.5 * grid.h * grid.h * float(np.sum(E2[grid.inside]))
    return kinetic, fld


def total_energy(particles: ParticleEnsemble, grid: Grid) -> float:
    """Kinetic plus electric field energy of the current state."""
    kinetic, fld = energy_parts(particles, grid)
    return kinetic + fld


def adiabatic_invariant(
    particles: ParticleEnsemble, model: FieldModel, t: float, domain_half_width: float | None = None
) -> float:
    """Weighted sum of e_k / b(t, x_k).

    When ``domain_half_width`` is given, particles outside that square are
    excluded (the continuum functional integrates over the bounded domain
    only).
    """
    if domain_half_width is None:
        sel = slice(None)
    else:
        sel = particles.in_square(domain_half_width)
    x = particles.x[sel]
    if x.shape[0] == 0:
        return 0.0
    b = model.b_many(t, x)
    return float(np.sum(particles.weight[sel] * particles.e[sel] / b))


def oscillation_observables(s: ParticleState) -> tuple[float, float]:
    """Fast-oscillation pair (2*v1*v2, v1^2 - v2^2) of the reconstructed velocity."""
    v = reconstruct_velocity(s.e, s.w)
    return (2.0 * v[0] * v[1], v[0] * v[0] - v[1] * v[1])
