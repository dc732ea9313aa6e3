"""Pure-NumPy implementations of the particle-loop kernels.

Field models are passed as small integer codes so the compiled backend
can mirror the signatures exactly:

* b_kind: 0 constant ``b_param``, 1 parabolic ``1 + b_param*x1^2``,
  2 disk ``10/sqrt(100 - |x|^2)``
* e_kind: 0 zero, 1 shear ``(0, -x2)``, 2 bilinear interpolation of a
  node-centred ``E_grid`` over the square ``[-L, L]^2`` (zero outside)

The disk field is evaluated on positions radially clamped to |x| = 9.9:
the exact flow never reaches the b singularity at |x| = 10 (the wall
confines), but Euler-type stage predictors of near-wall orbits can
overshoot it, and the bounded continuation keeps those stage values
finite without changing any resolved orbit.

Pushes modify X, e, W in place; one particle per row.
"""

from __future__ import annotations

import numpy as np

from ..fields import energy_surplus_many
from ..integrators import RK3_ALPHA, RK3_BETA, RK3_ETA, RK3_GAMMA, SDIRK2_GAMMA

_DISK_R2_CAP = 9.9 * 9.9


def _disk_r2(X: np.ndarray) -> np.ndarray:
    return np.minimum(X[:, 0] ** 2 + X[:, 1] ** 2, _DISK_R2_CAP)


def _b_many(b_kind: int, p: float, X: np.ndarray) -> np.ndarray:
    if b_kind == 0:
        return np.full(X.shape[0], p)
    if b_kind == 1:
        return 1.0 + p * X[:, 0] ** 2
    if b_kind == 2:
        return 10.0 / np.sqrt(100.0 - _disk_r2(X))
    raise ValueError(f"unknown b_kind {b_kind}")


def _grad_log_b_many(b_kind: int, p: float, X: np.ndarray) -> np.ndarray:
    out = np.zeros_like(X)
    if b_kind == 0:
        return out
    if b_kind == 1:
        out[:, 0] = 2.0 * p * X[:, 0] / (1.0 + p * X[:, 0] ** 2)
        return out
    if b_kind == 2:
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        r2c = np.minimum(r2, _DISK_R2_CAP)
        # positions beyond the cap are rescaled onto the |x| = 9.9 circle
        scale = np.sqrt(r2c / np.maximum(r2, 1e-300))
        out[:] = X * (scale / (100.0 - r2c))[:, None]
        return out
    raise ValueError(f"unknown b_kind {b_kind}")


def _E_many(e_kind: int, X: np.ndarray, E_grid, L: float) -> np.ndarray:
    if e_kind == 0:
        return np.zeros_like(X)
    if e_kind == 1:
        out = np.zeros_like(X)
        out[:, 1] = -X[:, 1]
        return out
    if e_kind == 2:
        return gather_bilinear(E_grid, L, X)
    raise ValueError(f"unknown e_kind {e_kind}")


def _solve_rotation(a: np.ndarray, beta: np.ndarray) -> np.ndarray:
    det = 1.0 + beta * beta
    out = np.empty_like(a)
    out[:, 0] = (a[:, 0] + beta * a[:, 1]) / det
    out[:, 1] = (a[:, 1] - beta * a[:, 0]) / det
    return out


def _cic_weights(X: np.ndarray, L: float, nx: int, ny: int):
    """Bilinear node weights for positions inside [-L, L]^2.

    Returns (in_square, iu, iv, fu, fv) with the base node clamped so a
    position exactly on the upper edge lands on the last node with full
    weight.
    """
    h = 2.0 * L / (nx - 1)
    u = (X[:, 0] + L) / h
    v = (X[:, 1] + L) / h
    in_square = (u >= 0.0) & (u <= nx - 1) & (v >= 0.0) & (v <= ny - 1)
    u = np.where(in_square, u, 0.0)
    v = np.where(in_square, v, 0.0)
    iu = np.minimum(u.astype(np.intp), nx - 2)
    iv = np.minimum(v.astype(np.intp), ny - 2)
    return in_square, iu, iv, u - iu, v - iv


def gather_bilinear(E_grid: np.ndarray, L: float, X: np.ndarray) -> np.ndarray:
    """Interpolate the node field at each position; zero outside the square."""
    ny, nx = E_grid.shape[0], E_grid.shape[1]
    ins, iu, iv, fu, fv = _cic_weights(X, L, nx, ny)
    w00 = (1.0 - fu) * (1.0 - fv)
    w10 = fu * (1.0 - fv)
    w01 = (1.0 - fu) * fv
    w11 = fu * fv
    out = (
        w00[:, None] * E_grid[iv, iu]
        + w10[:, None] * E_grid[iv, iu + 1]
        + w01[:, None] * E_grid[iv + 1, iu]
        + w11[:, None] * E_grid[iv + 1, iu + 1]
    )
    out[~ins] = 0.0
    return out


def deposit_cic(X: np.ndarray, weights: np.ndarray, L: float, rho: np.ndarray) -> int:
    """Accumulate weights/h^2 onto the four surrounding nodes of each particle.

    Adds into ``rho`` (shape (ny, nx)); particles outside the square are
    skipped and their number returned.
    """
    ny, nx = rho.shape
    h = 2.0 * L / (nx - 1)
    ins, iu, iv, fu, fv = _cic_weights(X, L, nx, ny)
    wt = np.where(ins, weights, 0.0) / (h * h)
    np.add.at(rho, (iv, iu), wt * (1.0 - fu) * (1.0 - fv))
    np.add.at(rho, (iv, iu + 1), wt * fu * (1.0 - fv))
    np.add.at(rho, (iv + 1, iu), wt * (1.0 - fu) * fv)
    np.add.at(rho, (iv + 1, iu + 1), wt * fu * fv)
    return int(np.count_nonzero(~ins))


def push_ensemble(
    X: np.ndarray,
    e: np.ndarray,
    W: np.ndarray,
    t: float,
    dt: float,
    eps: float,
    order: int,
    b_kind: int,
    b_param: float,
    e_kind: int,
    E_grid=None,
    L: float = 0.0,
) -> None:
    """Advance every particle one semi-implicit step of the given order."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    push = (_push1, _push2, _push3)[order - 1]
    push(X, e, W, t, dt, eps, b_kind, b_param, e_kind, E_grid, L)


def _push1(X, e, W, t, dt, eps, b_kind, b_param, e_kind, E_grid, L):
    b = _b_many(b_kind, b_param, X)
    E = _E_many(e_kind, X, E_grid, L)
    gl = _grad_log_b_many(b_kind, b_param, X)
    c = energy_surplus_many(e, W)
    r = dt / eps
    a = W + r * (E - c[:, None] * gl)
    W1 = _solve_rotation(a, dt * b / (eps * eps))
    X += r * W1
    e += r * np.einsum("ij,ij->i", E, W1)
    W[:] = W1


def _push2(X, e, W, t, dt, eps, b_kind, b_param, e_kind, E_grid, L):
    g = SDIRK2_GAMMA
    b_n = _b_many(b_kind, b_param, X)
    E_n = _E_many(e_kind, X, E_grid, L)
    gl_n = _grad_log_b_many(b_kind, b_param, X)
    c_n = energy_surplus_many(e, W)
    G_n = E_n - c_n[:, None] * gl_n

    r1 = g * dt / eps
    W1 = _solve_rotation(W + r1 * G_n, g * dt * b_n / (eps * eps))
    F1 = G_n.copy()
    F1[:, 0] += b_n * W1[:, 1] / eps
    F1[:, 1] -= b_n * W1[:, 0] / eps
    S1 = np.einsum("ij,ij->i", E_n, W1)

    rh = dt / (2.0 * g * eps)
    Xh = X + rh * W1
    eh = e + rh * S1
    Wh = W + rh * F1
    th = t + dt / (2.0 * g)

    b_h = _b_many(b_kind, b_param, Xh)
    E_h = _E_many(e_kind, Xh, E_grid, L)
    gl_h = _grad_log_b_many(b_kind, b_param, Xh)
    c_h = energy_surplus_many(eh, Wh)
    G_h = E_h - c_h[:, None] * gl_h

    r2 = (1.0 - g) * dt / eps
    W2 = _solve_rotation(W + r2 * F1 + r1 * G_h, g * dt * b_h / (eps * eps))
    S2 = np.einsum("ij,ij->i", E_h, W2)

    X += r2 * W1 + r1 * W2
    e += r2 * S1 + r1 * S2
    W[:] = W2


def _push3(X, e, W, t, dt, eps, b_kind, b_param, e_kind, E_grid, L):
    al, be, et, ga = RK3_ALPHA, RK3_BETA, RK3_ETA, RK3_GAMMA
    ra = al * dt / eps

    b_n = _b_many(b_kind, b_param, X)
    E_n = _E_many(e_kind, X, E_grid, L)
    gl_n = _grad_log_b_many(b_kind, b_param, X)
    c_n = energy_surplus_many(e, W)
    G_n = E_n - c_n[:, None] * gl_n
    beta_n = al * dt * b_n / (eps * eps)

    W1 = _solve_rotation(W + ra * G_n, beta_n)
    F1 = G_n.copy()
    F1[:, 0] += b_n * W1[:, 1] / eps
    F1[:, 1] -= b_n * W1[:, 0] / eps
    S1 = np.einsum("ij,ij->i", E_n, W1)

    W2 = _solve_rotation(W - ra * F1 + ra * G_n, beta_n)
    F2 = G_n.copy()
    F2[:, 0] += b_n * W2[:, 1] / eps
    F2[:, 1] -= b_n * W2[:, 0] / eps
    S2 = np.einsum("ij,ij->i", E_n, W2)

    rf = dt / eps
    Xh2 = X + rf * W2
    eh2 = e + rf * S2
    Wh2 = W + rf * F2
    t3 = t + dt
    b_3 = _b_many(b_kind, b_param, Xh2)
    E_3 = _E_many(e_kind, Xh2, E_grid, L)
    gl_3 = _grad_log_b_many(b_kind, b_param, Xh2)
    c_3 = energy_surplus_many(eh2, Wh2)
    G_3 = E_3 - c_3[:, None] * gl_3

    r3 = (1.0 - al) * dt / eps
    W3 = _solve_rotation(W + r3 * F2 + ra * G_3, al * dt * b_3 / (eps * eps))
    F3 = G_3.copy()
    F3[:, 0] += b_3 * W3[:, 1] / eps
    F3[:, 1] -= b_3 * W3[:, 0] / eps
    S3 = np.einsum("ij,ij->i", E_3, W3)

    rq = dt / (4.0 * eps)
    Xh3 = X + rq * (W2 + W3)
    eh3 = e + rq * (S2 + S3)
    Wh3 = W + rq * (F2 + F3)
    t4 = t + 0.5 * dt
    b_4 = _b_many(b_kind, b_param, Xh3)
    E_4 = _E_many(e_kind, Xh3, E_grid, L)
    gl_4 = _grad_log_b_many(b_kind, b_param, Xh3)
    c_4 = energy_surplus_many(eh3, Wh3)
    G_4 = E_4 - c_4[:, None] * gl_4

    rb, re, rg = be * dt / eps, et * dt / eps, ga * dt / eps
    W4 = _solve_rotation(
        W + rb * F1 + re * F2 + rg * F3 + ra * G_4, al * dt * b_4 / (eps * eps)
    )
    F4 = G_4.copy()
    F4[:, 0] += b_4 * W4[:, 1] / eps
    F4[:, 1] -= b_4 * W4[:, 0] / eps
    S4 = np.einsum("ij,ij->i", E_4, W4)

    r6 = dt / (6.0 * eps)
    X += r6 * (W2 + W3 + 4.0 * W4)
    e += r6 * (S2 + S3 + 4.0 * S4)
    W += r6 * (F2 + F3 + 4.0 * F4)
