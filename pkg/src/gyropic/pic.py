"""Self-consistent Vlasov-Poisson machinery on a masked disk grid.

The physical domain is the disk of radius L = 6 embedded in the square
[-L, L]^2 carrying a uniform node-centred Cartesian mesh.  The potential
satisfies the 5-point discrete Poisson equation on nodes strictly inside
the disk, with phi = 0 pinned on every other node (homogeneous Dirichlet
data applied on the first layer outside the disk, first-order accurate
at the curved boundary).  Particles outside the square are treated as
escaped: they feel no electric field, deposit no charge, and are counted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import FieldModel, Vec2
from .integrators import NonFiniteStateError, SchemeParams


class PoissonConvergenceError(RuntimeError):
    """Conjugate gradient failed to reach the target residual."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"conjugate gradient stalled after {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


@dataclass
class Grid:
    """Uniform mesh over [-L, L]^2 with an open-disk interior mask."""

    nx: int = 65
    ny: int = 0
    L: float = 6.0

    def __post_init__(self):
        if self.ny == 0:
            self.ny = self.nx
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per direction")
        self.h = 2.0 * self.L / (self.nx - 1)
        self.xs = -self.L + self.h * np.arange(self.nx)
        self.ys = -self.L + (2.0 * self.L / (self.ny - 1)) * np.arange(self.ny)
        xx, yy = np.meshgrid(self.xs, self.ys)
        self.inside = xx * xx + yy * yy < self.L * self.L
        self.rho = np.zeros((self.ny, self.nx))
        self.phi = np.zeros((self.ny, self.nx))
        self.E_grid = np.zeros((self.ny, self.nx, 2))


@dataclass
class ParticleEnsemble:
    """Ordered macro-particle arrays; row k is particle k throughout a run."""

    x: np.ndarray
    e: np.ndarray
    w: np.ndarray
    weight: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.e = np.ascontiguousarray(self.e, dtype=np.float64)
        self.w = np.ascontiguousarray(self.w, dtype=np.float64)
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float64)
        n = self.x.shape[0]
        if self.x.shape != (n, 2) or self.w.shape != (n, 2):
            raise ValueError("x and w must have shape (N, 2)")
        if self.e.shape != (n,) or self.weight.shape != (n,):
            raise ValueError("e and weight must have shape (N,)")

    @property
    def count(self) -> int:
        return self.x.shape[0]

    def in_square(self, L: float) -> np.ndarray:
        return (np.abs(self.x[:, 0]) <= L) & (np.abs(self.x[:, 1]) <= L)


@dataclass(frozen=True)
class InitialDataSpec:
    """Two-Gaussian spatial mixture with a Maxwellian velocity profile."""

    center: Vec2 = (1.5, -1.5)
    position_sigma: float = 1.0
    velocity_variance: float = 2.0


def sample_initial(spec: InitialDataSpec, N: int, seed: int) -> ParticleEnsemble:
    """Draw N macro-particles from the mixture; total weight is exactly 1.

    Each particle flips a fair coin between the two mixture centers, then
    adds an isotropic Gaussian offset; velocities are centred Gaussians
    with the spec's per-component variance.  The auxiliary state starts on
    the constraint: w = v and e = |v|^2/2.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    signs = np.where(rng.integers(0, 2, N) == 0, 1.0, -1.0)
    x = rng.normal(0.0, spec.position_sigma, (N, 2))
    x[:, 0] += signs * spec.center[0]
    x[:, 1] += signs * spec.center[1]
    v = rng.normal(0.0, math.sqrt(spec.velocity_variance), (N, 2))
    e = 0.5 * (v[:, 0] ** 2 + v[:, 1] ** 2)
    weight = np.full(N, 1.0 / N)
    return ParticleEnsemble(x, e, v.copy(), weight, seed=seed)


def deposit_charge(particles: ParticleEnsemble, grid: Grid, workers: int = 1) -> int:
    """Cloud-in-cell deposition of particle weights into grid.rho.

    Returns the number of particles outside the square (excluded from the
    deposit).  With workers > 1 the ensemble is split into contiguous
    partitions deposited into private buffers and merged in partition
    order, so results are deterministic for a fixed worker count.
    """
    grid.rho[:] = 0.0
    n = particles.count
    if workers <= 1 or n < 2 * workers:
        return kernels.deposit_cic(particles.x, particles.weight, grid.L, grid.rho)

    bounds = _partition(n, workers)
    buffers = [np.zeros_like(grid.rho) for _ in range(len(bounds))]

    def run(k: int) -> int:
        i0, i1 = bounds[k]
        return kernels.deposit_cic(
            particles.x[i0:i1], particles.weight[i0:i1], grid.L, buffers[k]
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        escaped = sum(pool.map(run, range(len(bounds))))
    for buf in buffers:
        grid.rho += buf
    return escaped


def solve_poisson(grid: Grid, rtol: float = 1e-10, max_iter: int = 20000) -> int:
    """Solve -lap(phi) = rho on inside nodes by conjugate gradient.

    phi is zeroed on all masked nodes.  Afterwards E_grid = -grad(phi) by
    central differences (one-sided on the outer square edges); the masked
    nodes carry phi = 0, which is the Dirichlet extension the 5-point
    operator itself uses.  Returns the iteration count; raises
    :class:`PoissonConvergenceError` if the relative residual has not
    reached rtol within max_iter iterations.
    """
    inside = grid.inside
    h2 = grid.h * grid.h

    b = np.where(inside, grid.rho, 0.0)
    b_norm = math.sqrt(float(np.sum(b * b)))
    if b_norm == 0.0:
        grid.phi[:] = 0.0
        grid.E_grid[:] = 0.0
        return 0

    def apply_op(p: np.ndarray) -> np.ndarray:
        # 5-point -laplacian; p vanishes off-mask so the np.roll wrap is
        # harmless (the square's edge nodes are never inside the disk).
        out = 4.0 * p
        out -= np.roll(p, 1, axis=0)
        out -= np.roll(p, -1, axis=0)
        out -= np.roll(p, 1, axis=1)
        out -= np.roll(p, -1, axis=1)
        out /= h2
        return np.where(inside, out, 0.0)

    phi = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(np.sum(r * r))
    target = rtol * b_norm
    iterations = 0
    while math.sqrt(rs) > target:
        if iterations >= max_iter:
            raise PoissonConvergenceError(iterations, math.sqrt(rs) / b_norm)
        ap = apply_op(p)
        alpha = rs / float(np.sum(p * ap))
        phi += alpha * p
        r -= alpha * ap
        rs_new = float(np.sum(r * r))
        p = r + (rs_new / rs) * p
        rs = rs_new
        iterations += 1

    grid.phi[:] = np.where(inside, phi, 0.0)
    dphi_dy, dphi_dx = np.gradient(grid.phi, grid.h)
    grid.E_grid[:, :, 0] = -dphi_dx
    grid.E_grid[:, :, 1] = -dphi_dy
    return iterations


def gather_field(grid: Grid, x: Vec2) -> Vec2:
    """Bilinear interpolation of E_grid at one position; (0, 0) off-square."""
    out = kernels.gather_bilinear(grid.E_grid, grid.L, np.array([x], dtype=np.float64))
    return (float(out[0, 0]), float(out[0, 1]))


def reconstruct_velocity(e: float, w: Vec2) -> Vec2:
    """Velocity with magnitude sqrt(2*max(e,0)) along w; (0,0) for tiny w."""
    norm = math.hypot(w[0], w[1])
    if norm <= 1e-14:
        return (0.0, 0.0)
    scale = math.sqrt(2.0 * max(e, 0.0)) / norm
    return (scale * w[0], scale * w[1])


def reconstruct_velocity_many(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    norm = np.hypot(w[:, 0], w[:, 1])
    safe = norm > 1e-14
    scale = np.zeros_like(norm)
    np.divide(np.sqrt(2.0 * np.maximum(e, 0.0)), norm, out=scale, where=safe)
    return w * scale[:, None]


class FrozenGridField(FieldModel):
    """External magnetic model combined with the grid's frozen electric field."""

    def __init__(self, b_model: FieldModel, grid: Grid):
        self.b_model = b_model
        self.grid = grid
        self.b_floor = b_model.b_floor

    def b(self, t, x):
        return self.b_model.b(t, x)

    def grad_log_b(self, t, x):
        return self.b_model.grad_log_b(t, x)

    def E(self, t, x):
        return gather_field(self.grid, x)

    def b_many(self, t, X):
        return self.b_model.b_many(t, X)

    def grad_log_b_many(self, t, X):
        return self.b_model.grad_log_b_many(t, X)

    def E_many(self, t, X):
        return kernels.gather_bilinear(self.grid.E_grid, self.grid.L, X)


def _partition(n: int, workers: int) -> list[tuple[int, int]]:
    chunk = (n + workers - 1) // workers
    return [(i, min(i + chunk, n)) for i in range(0, n, chunk)]


def push_ensemble_frozen(
    particles: ParticleEnsemble,
    grid: Grid,
    t: float,
    p: SchemeParams,
    b_model: FieldModel,
    workers: int = 1,
) -> None:
    """Advance all particles one step against the frozen grid field."""
    spec = b_model.kernel_spec()
    if spec is None:
        raise ValueError("vp push requires an analytic magnetic model")
    b_kind, b_param, _ = spec

    def run(i0: int, i1: int) -> None:
        kernels.push_ensemble(
            particles.x[i0:i1], particles.e[i0:i1], particles.w[i0:i1],
            t, p.dt, p.epsilon, p.order,
            b_kind, b_param, 2, grid.E_grid, grid.L,
        )

    n = particles.count
    if workers <= 1 or n < 2 * workers:
        run(0, n)
    else:
        bounds = _partition(n, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda ij: run(*ij), bounds))


def vp_step(
    particles: ParticleEnsemble,
    grid: Grid,
    t: float,
    p: SchemeParams,
    b_model: FieldModel,
    workers: int = 1,
) -> ParticleEnsemble:
    """One self-consistent step: deposit, solve, then push with frozen E.

    Every stage of the push interpolates the electric field from the grid
    state computed at the start of the step (a splitting choice: the
    Poisson equation is solved once per step, not once per stage).
    Mutates the ensemble and grid in place and returns the ensemble.
    """
    deposit_charge(particles, grid, workers)
    solve_poisson(grid)
    push_ensemble_frozen(particles, grid, t, p, b_model, workers)
    if not (
        np.all(np.isfinite(particles.x))
        and np.all(np.isfinite(particles.e))
        and np.all(np.isfinite(particles.w))
    ):
        raise NonFiniteStateError(0)
    return particles
