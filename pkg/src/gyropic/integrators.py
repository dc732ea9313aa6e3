"""Time integrators for the augmented particle system and its drift limit.

The augmented state (x, e, w) obeys

    eps * dx/dt = w
    eps * de/dt = E(t,x) . w
    eps * dw/dt = -b(t,x) * perp(w)/eps + E(t,x) - energy_surplus(e,w) * grad(ln b)(t,x)

whose stiffness sits entirely in the rotation term.  The semi-implicit
steppers of orders 1-3 treat that rotation implicitly (one closed-form
2x2 solve per stage) and everything else explicitly, so the cost per
step matches a fully explicit scheme while the step size can stay large
compared to eps^2.  As eps -> 0 at fixed step the iterates land on the
explicit drift schemes implemented in :func:`step_limit`.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

from .fields import FieldModel, Vec2, dot, energy_surplus, full_drift, energy_drift_rate, perp

# Implicit-stage weight of the two-stage L-stable SDIRK pair: the smaller
# root of X^2 - 2X + 1/2.
SDIRK2_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)

# Stage weights of the four-stage, third-order semi-implicit scheme.
RK3_ALPHA = 0.24169426078821
RK3_ETA = 0.12915286960590
RK3_BETA = RK3_ALPHA / 4.0
RK3_GAMMA = 0.5 - RK3_ALPHA - RK3_BETA - RK3_ETA


class ParticleState(NamedTuple):
    """Augmented phase-space state of one macro-particle."""

    x: Vec2
    e: float
    w: Vec2
    weight: float = 1.0


class GuidingCenterState(NamedTuple):
    """Drift-limit state: guiding-center position and drift kinetic energy."""

    y: Vec2
    g: float


class SchemeParams(NamedTuple):
    """Step parameters of the semi-implicit schemes."""

    epsilon: float
    dt: float
    order: int = 3

    def validate(self) -> "SchemeParams":
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        return self


class NonFiniteStateError(RuntimeError):
    """A trajectory produced a NaN or infinity."""

    def __init__(self, step_index: int):
        super().__init__(f"non-finite state at step {step_index}")
        self.step_index = step_index


def solve_rotation_system(a: Vec2, beta: float) -> Vec2:
    """Solve w + beta*perp(w) = a in closed form.

    The matrix [[1, -beta], [beta, 1]] has determinant 1 + beta^2 > 0, so
    the solve never fails and |w| = |a| / sqrt(1 + beta^2).
    """
    det = 1.0 + beta * beta
    return ((a[0] + beta * a[1]) / det, (a[1] - beta * a[0]) / det)


def step_order1(s: ParticleState, t: float, p: SchemeParams, model: FieldModel) -> ParticleState:
    """One step of the first-order semi-implicit (backward/forward Euler) scheme."""
    eps, dt = p.epsilon, p.dt
    x, e, w = s.x, s.e, s.w
    b = model.b(t, x)
    E = model.E(t, x)
    gl = model.grad_log_b(t, x)
    c = energy_surplus(e, w)
    # w update: w1 + (dt*b/eps^2) perp(w1) = w + (dt/eps)(E - c*grad ln b)
    r = dt / eps
    a = (w[0] + r * (E[0] - c * gl[0]), w[1] + r * (E[1] - c * gl[1]))
    w1 = solve_rotation_system(a, dt * b / (eps * eps))
    x1 = (x[0] + r * w1[0], x[1] + r * w1[1])
    e1 = e + r * dot(E, w1)
    return ParticleState(x1, e1, w1, s.weight)


def step_order2(s: ParticleState, t: float, p: SchemeParams, model: FieldModel) -> ParticleState:
    """One step of the two-stage, second-order semi-implicit SDIRK scheme."""
    eps, dt = p.epsilon, p.dt
    g = SDIRK2_GAMMA
    x, e, w = s.x, s.e, s.w

    # Stage 1, fields frozen at (t, x)
    b_n = model.b(t, x)
    E_n = model.E(t, x)
    gl_n = model.grad_log_b(t, x)
    c_n = energy_surplus(e, w)
    G_n = (E_n[0] - c_n * gl_n[0], E_n[1] - c_n * gl_n[1])
    r1 = g * dt / eps
    a1 = (w[0] + r1 * G_n[0], w[1] + r1 * G_n[1])
    w1 = solve_rotation_system(a1, g * dt * b_n / (eps * eps))
    F1 = (G_n[0] - b_n * (-w1[1]) / eps, G_n[1] - b_n * w1[0] / eps)
    S1 = dot(E_n, w1)

    # Intermediate hat values carry the stage-1 slope over a stretched
    # substep dt/(2*gamma), which places the stage-2 field evaluation at
    # t + dt/(2*gamma).
    rh = dt / (2.0 * g * eps)
    xh = (x[0] + rh * w1[0], x[1] + rh * w1[1])
    eh = e + rh * S1
    wh = (w[0] + rh * F1[0], w[1] + rh * F1[1])
    th = t + dt / (2.0 * g)

    # Stage 2, fields at (th, xh)
    b_h = model.b(th, xh)
    E_h = model.E(th, xh)
    gl_h = model.grad_log_b(th, xh)
    c_h = energy_surplus(eh, wh)
    G_h = (E_h[0] - c_h * gl_h[0], E_h[1] - c_h * gl_h[1])
    r2 = (1.0 - g) * dt / eps
    a2 = (w[0] + r2 * F1[0] + r1 * G_h[0], w[1] + r2 * F1[1] + r1 * G_h[1])
    w2 = solve_rotation_system(a2, g * dt * b_h / (eps * eps))
    S2 = dot(E_h, w2)

    x2 = (x[0] + r2 * w1[0] + r1 * w2[0], x[1] + r2 * w1[1] + r1 * w2[1])
    e2 = e + r2 * S1 + r1 * S2
    return ParticleState(x2, e2, w2, s.weight)


def step_order3(s: ParticleState, t: float, p: SchemeParams, model: FieldModel) -> ParticleState:
    """One step of the four-stage, third-order semi-implicit scheme."""
    eps, dt = p.epsilon, p.dt
    al, be, et, ga = RK3_ALPHA, RK3_BETA, RK3_ETA, RK3_GAMMA
    x, e, w = s.x, s.e, s.w
    ra = al * dt / eps

    # Stages 1-2 freeze every field evaluation at (t, x).
    b_n = model.b(t, x)
    E_n = model.E(t, x)
    gl_n = model.grad_log_b(t, x)
    c_n = energy_surplus(e, w)
    G_n = (E_n[0] - c_n * gl_n[0], E_n[1] - c_n * gl_n[1])
    beta_n = al * dt * b_n / (eps * eps)

    w1 = solve_rotation_system((w[0] + ra * G_n[0], w[1] + ra * G_n[1]), beta_n)
    F1 = (G_n[0] + b_n * w1[1] / eps, G_n[1] - b_n * w1[0] / eps)
    S1 = dot(E_n, w1)

    a2 = (w[0] - ra * F1[0] + ra * G_n[0], w[1] - ra * F1[1] + ra * G_n[1])
    w2 = solve_rotation_system(a2, beta_n)
    F2 = (G_n[0] + b_n * w2[1] / eps, G_n[1] - b_n * w2[0] / eps)
    S2 = dot(E_n, w2)

    # Stage 3 at time t + dt, position advanced a full step with the
    # stage-2 slope.
    rf = dt / eps
    xh2 = (x[0] + rf * w2[0], x[1] + rf * w2[1])
    eh2 = e + rf * S2
    wh2 = (w[0] + rf * F2[0], w[1] + rf * F2[1])
    t3 = t + dt
    b_3 = model.b(t3, xh2)
    E_3 = model.E(t3, xh2)
    gl_3 = model.grad_log_b(t3, xh2)
    c_3 = energy_surplus(eh2, wh2)
    G_3 = (E_3[0] - c_3 * gl_3[0], E_3[1] - c_3 * gl_3[1])
    r3 = (1.0 - al) * dt / eps
    a3 = (w[0] + r3 * F2[0] + ra * G_3[0], w[1] + r3 * F2[1] + ra * G_3[1])
    w3 = solve_rotation_system(a3, al * dt * b_3 / (eps * eps))
    F3 = (G_3[0] + b_3 * w3[1] / eps, G_3[1] - b_3 * w3[0] / eps)
    S3 = dot(E_3, w3)

    # Stage 4 at the half step, slopes averaged from stages 2-3.
    rq = dt / (4.0 * eps)
    xh3 = (x[0] + rq * (w2[0] + w3[0]), x[1] + rq * (w2[1] + w3[1]))
    eh3 = e + rq * (S2 + S3)
    wh3 = (w[0] + rq * (F2[0] + F3[0]), w[1] + rq * (F2[1] + F3[1]))
    t4 = t + 0.5 * dt
    b_4 = model.b(t4, xh3)
    E_4 = model.E(t4, xh3)
    gl_4 = model.grad_log_b(t4, xh3)
    c_4 = energy_surplus(eh3, wh3)
    G_4 = (E_4[0] - c_4 * gl_4[0], E_4[1] - c_4 * gl_4[1])
    rb, re, rg = be * dt / eps, et * dt / eps, ga * dt / eps
    a4 = (
        w[0] + rb * F1[0] + re * F2[0] + rg * F3[0] + ra * G_4[0],
        w[1] + rb * F1[1] + re * F2[1] + rg * F3[1] + ra * G_4[1],
    )
    w4 = solve_rotation_system(a4, al * dt * b_4 / (eps * eps))
    F4 = (G_4[0] + b_4 * w4[1] / eps, G_4[1] - b_4 * w4[0] / eps)
    S4 = dot(E_4, w4)

    r6 = dt / (6.0 * eps)
    x_next = (
        x[0] + r6 * (w2[0] + w3[0] + 4.0 * w4[0]),
        x[1] + r6 * (w2[1] + w3[1] + 4.0 * w4[1]),
    )
    e_next = e + r6 * (S2 + S3 + 4.0 * S4)
    w_next = (
        w[0] + r6 * (F2[0] + F3[0] + 4.0 * F4[0]),
        w[1] + r6 * (F2[1] + F3[1] + 4.0 * F4[1]),
    )
    return ParticleState(x_next, e_next, w_next, s.weight)


_STEPPERS = {1: step_order1, 2: step_order2, 3: step_order3}


def make_stepper(order: int):
    """Return the semi-implicit stepper of the requested order."""
    try:
        return _STEPPERS[order]
    except KeyError:
        raise ValueError("order must be 1, 2 or 3") from None


def step_reference(
    s: ParticleState, t: float, dt_fine: float, epsilon: float, model: FieldModel
) -> ParticleState:
    """One classical RK4 step of the stiff system, without the surplus gate.

    Along the constraint e = |w|^2/2, which the continuous flow preserves,
    the gated and ungated systems coincide, so this integrates the plain
    augmented system.  Accurate only for dt_fine small compared to eps^2.
    """
    eps = epsilon

    def rhs(tt: float, x: Vec2, e: float, w: Vec2):
        b = model.b(tt, x)
        E = model.E(tt, x)
        return (
            (w[0] / eps, w[1] / eps),
            dot(E, w) / eps,
            ((b * w[1] / eps + E[0]) / eps, (-b * w[0] / eps + E[1]) / eps),
        )

    x, e, w = s.x, s.e, s.w
    h = dt_fine
    kx1, ke1, kw1 = rhs(t, x, e, w)
    kx2, ke2, kw2 = rhs(
        t + 0.5 * h,
        (x[0] + 0.5 * h * kx1[0], x[1] + 0.5 * h * kx1[1]),
        e + 0.5 * h * ke1,
        (w[0] + 0.5 * h * kw1[0], w[1] + 0.5 * h * kw1[1]),
    )
    kx3, ke3, kw3 = rhs(
        t + 0.5 * h,
        (x[0] + 0.5 * h * kx2[0], x[1] + 0.5 * h * kx2[1]),
        e + 0.5 * h * ke2,
        (w[0] + 0.5 * h * kw2[0], w[1] + 0.5 * h * kw2[1]),
    )
    kx4, ke4, kw4 = rhs(
        t + h,
        (x[0] + h * kx3[0], x[1] + h * kx3[1]),
        e + h * ke3,
        (w[0] + h * kw3[0], w[1] + h * kw3[1]),
    )
    c = h / 6.0
    return ParticleState(
        (
            x[0] + c * (kx1[0] + 2.0 * kx2[0] + 2.0 * kx3[0] + kx4[0]),
            x[1] + c * (kx1[1] + 2.0 * kx2[1] + 2.0 * kx3[1] + kx4[1]),
        ),
        e + c * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4),
        (
            w[0] + c * (kw1[0] + 2.0 * kw2[0] + 2.0 * kw3[0] + kw4[0]),
            w[1] + c * (kw1[1] + 2.0 * kw2[1] + 2.0 * kw3[1] + kw4[1]),
        ),
        s.weight,
    )


def step_limit(
    gc: GuidingCenterState, t: float, dt: float, order: int, model: FieldModel
) -> GuidingCenterState:
    """One explicit step of the drift-limit scheme of the given order."""
    y, g = gc.y, gc.g
    U_n = full_drift(model, t, y, g)
    T_n = energy_drift_rate(model, t, y, g)
    if order == 1:
        return GuidingCenterState((y[0] + dt * U_n[0], y[1] + dt * U_n[1]), g + dt * T_n)
    if order == 2:
        ga = SDIRK2_GAMMA
        rh = dt / (2.0 * ga)
        yh = (y[0] + rh * U_n[0], y[1] + rh * U_n[1])
        gh = g + rh * T_n
        th = t + rh
        U_1 = full_drift(model, th, yh, gh)
        T_1 = energy_drift_rate(model, th, yh, gh)
        return GuidingCenterState(
            (
                y[0] + (1.0 - ga) * dt * U_n[0] + ga * dt * U_1[0],
                y[1] + (1.0 - ga) * dt * U_n[1] + ga * dt * U_1[1],
            ),
            g + (1.0 - ga) * dt * T_n + ga * dt * T_1,
        )
    if order == 3:
        y1 = (y[0] + dt * U_n[0], y[1] + dt * U_n[1])
        g1 = g + dt * T_n
        U_1 = full_drift(model, t + dt, y1, g1)
        T_1 = energy_drift_rate(model, t + dt, y1, g1)
        y2 = (
            y[0] + 0.25 * dt * (U_n[0] + U_1[0]),
            y[1] + 0.25 * dt * (U_n[1] + U_1[1]),
        )
        g2 = g + 0.25 * dt * (T_n + T_1)
        U_2 = full_drift(model, t + 0.5 * dt, y2, g2)
        T_2 = energy_drift_rate(model, t + 0.5 * dt, y2, g2)
        return GuidingCenterState(
            (
                y[0] + dt / 6.0 * (U_n[0] + U_1[0] + 4.0 * U_2[0]),
                y[1] + dt / 6.0 * (U_n[1] + U_1[1] + 4.0 * U_2[1]),
            ),
            g + dt / 6.0 * (T_n + T_1 + 4.0 * T_2),
        )
    raise ValueError("order must be 1, 2 or 3")


def _is_finite_particle(s: ParticleState) -> bool:
    return (
        math.isfinite(s.x[0])
        and math.isfinite(s.x[1])
        and math.isfinite(s.e)
        and math.isfinite(s.w[0])
        and math.isfinite(s.w[1])
    )


def _is_finite_gc(s: GuidingCenterState) -> bool:
    return math.isfinite(s.y[0]) and math.isfinite(s.y[1]) and math.isfinite(s.g)


def num_steps(t0: float, T: float, dt: float) -> int:
    """floor((T - t0)/dt), tolerant of roundoff just below an integer."""
    if T < t0:
        raise ValueError("final time precedes initial time")
    return int(math.floor((T - t0) / dt + 1e-9))


def integrate_trajectory(
    initial,
    t0: float,
    T: float,
    dt: float,
    step: Callable,
) -> list:
    """Apply `step(state, t)` repeatedly, returning states at t0..t0+N*dt.

    N = floor((T - t0)/dt); the returned list has N+1 entries, the first
    being the initial state.  Raises :class:`NonFiniteStateError` with the
    offending step index if any produced state contains a NaN or infinity.
    """
    n = num_steps(t0, T, dt)
    is_finite = _is_finite_particle if isinstance(initial, ParticleState) else _is_finite_gc
    out = [initial]
    state = initial
    for k in range(n):
        state = step(state, t0 + k * dt)
        if not is_finite(state):
            raise NonFiniteStateError(k + 1)
        out.append(state)
    return out


def reference_trajectory(
    initial: ParticleState,
    t0: float,
    T: float,
    coarse_dt: float,
    epsilon: float,
    model: FieldModel,
    dt_fine_target: float,
) -> list[ParticleState]:
    """RK4 reference states sampled on the coarse grid t0 + n*coarse_dt.

    The fine step is coarse_dt/n_sub with n_sub chosen so the fine grid
    hits every coarse time exactly and the fine step does not exceed
    dt_fine_target.  Uses the compiled kernel when the model supports it.
    """
    if dt_fine_target <= 0.0:
        raise ValueError("dt_fine_target must be positive")
    n_coarse = num_steps(t0, T, coarse_dt)
    n_sub = max(1, int(math.ceil(coarse_dt / dt_fine_target - 1e-9)))
    dt_fine = coarse_dt / n_sub

    from . import kernels

    spec = model.kernel_spec()
    if spec is not None and kernels.HAS_COMPILED:
        b_kind, b_param, e_kind = spec
        X, E_arr, W = kernels.reference_orbit(
            initial.x, initial.e, initial.w, t0, n_coarse, n_sub, dt_fine,
            epsilon, b_kind, b_param, e_kind,
        )
        out = []
        for i in range(n_coarse + 1):
            s = ParticleState(
                (X[i, 0], X[i, 1]), E_arr[i], (W[i, 0], W[i, 1]), initial.weight
            )
            if not _is_finite_particle(s):
                raise NonFiniteStateError(i)
            out.append(s)
        return out

    out = [initial]
    state = initial
    for n in range(n_coarse):
        for k in range(n_sub):
            state = step_reference(state, t0 + n * coarse_dt + k * dt_fine, dt_fine, epsilon, model)
        if not _is_finite_particle(state):
            raise NonFiniteStateError(n + 1)
        out.append(state)
    return out


def orbit_b_bound(model: FieldModel, states, times, epsilon: float) -> float:
    """Upper estimate of b along the true orbit threading the given states.

    The slow variables (x, e) of the supplied trajectory track the exact
    orbit, but the gyration sweeps a circle of radius eps*sqrt(2e)/b around
    each point; b is sampled on that circle (skipping points outside the
    model's domain) and the maximum padded by 20 percent.  Used to pick a
    fine step that resolves the rotation rate b/eps^2.
    """
    from .fields import FieldDomainError

    best = model.b_floor
    for s, t in zip(states, times):
        x = s.x if isinstance(s, ParticleState) else s.y
        e = s.e if isinstance(s, ParticleState) else s.g
        b_here = model.b(t, x)
        best = max(best, b_here)
        radius = epsilon * math.sqrt(2.0 * max(e, 0.0)) / b_here
        for k in range(8):
            ang = k * math.pi / 4.0
            p = (x[0] + radius * math.cos(ang), x[1] + radius * math.sin(ang))
            try:
                best = max(best, model.b(t, p))
            except FieldDomainError:
                continue
    return 1.2 * best


def limit_reference_trajectory(
    gc0: GuidingCenterState,
    t0: float,
    T: float,
    coarse_dt: float,
    model: FieldModel,
    n_sub: int = 100,
) -> list[GuidingCenterState]:
    """RK4 on the (non-stiff) drift system, sampled on the coarse grid."""

    def rhs(t: float, y: Vec2, g: float):
        return full_drift(model, t, y, g), energy_drift_rate(model, t, y, g)

    n_coarse = num_steps(t0, T, coarse_dt)
    h = coarse_dt / n_sub
    out = [gc0]
    y, g = gc0.y, gc0.g
    for n in range(n_coarse):
        for k in range(n_sub):
            t = t0 + n * coarse_dt + k * h
            ky1, kg1 = rhs(t, y, g)
            ky2, kg2 = rhs(
                t + 0.5 * h, (y[0] + 0.5 * h * ky1[0], y[1] + 0.5 * h * ky1[1]), g + 0.5 * h * kg1
            )
            ky3, kg3 = rhs(
                t + 0.5 * h, (y[0] + 0.5 * h * ky2[0], y[1] + 0.5 * h * ky2[1]), g + 0.5 * h * kg2
            )
            ky4, kg4 = rhs(t + h, (y[0] + h * ky3[0], y[1] + h * ky3[1]), g + h * kg3)
            c = h / 6.0
            y = (
                y[0] + c * (ky1[0] + 2.0 * ky2[0] + 2.0 * ky3[0] + ky4[0]),
                y[1] + c * (ky1[1] + 2.0 * ky2[1] + 2.0 * ky3[1] + ky4[1]),
            )
            g = g + c * (kg1 + 2.0 * kg2 + 2.0 * kg3 + kg4)
        state = GuidingCenterState(y, g)
        if not _is_finite_gc(state):
            raise NonFiniteStateError(n + 1)
        out.append(state)
    return out
