"""Electromagnetic field configurations and drift-velocity formulas.

All fields live in the plane perpendicular to the magnetic axis: the
magnetic field enters only through its scalar magnitude ``b(t, x)`` and
the gradient of its logarithm, the electric field through a 2D vector
``E(t, x)``.  Positions and velocities are plain ``(v1, v2)`` tuples in
the scalar API; the ``*_many`` methods accept ``(N, 2)`` NumPy arrays
for use in the particle loops.
"""

from __future__ import annotations

import math

import numpy as np

Vec2 = tuple[float, float]


class FieldDomainError(ValueError):
    """A field was evaluated outside its domain of definition."""


def perp(v: Vec2) -> Vec2:
    """Rotate a vector by +90 degrees: (v1, v2) -> (-v2, v1)."""
    return (-v[1], v[0])


def dot(a: Vec2, b: Vec2) -> float:
    return a[0] * b[0] + a[1] * b[1]


def energy_surplus(e: float, w: Vec2) -> float:
    """Clamped surplus of the energy variable over the kinetic energy of w.

    Returns ``e/(e + |w|^2/2) * max(e - |w|^2/2, 0)``, the smooth gate that
    switches on the mirror-force term only when the energy variable exceeds
    the kinetic energy carried by the direction variable.  Total on all of
    R x R^2: the prefactor is clamped into [0, 1] and the value is 0 whenever
    the denominator underflows, so 0 <= result <= max(e, 0) always holds.
    """
    half_w2 = 0.5 * (w[0] * w[0] + w[1] * w[1])
    denom = e + half_w2
    if denom <= 1e-300:
        return 0.0
    surplus = e - half_w2
    if surplus <= 0.0:
        return 0.0
    pref = e / denom
    if pref > 1.0:
        pref = 1.0
    elif pref < 0.0:
        pref = 0.0
    return pref * surplus


def energy_surplus_many(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vectorized :func:`energy_surplus` for e of shape (N,) and w of (N, 2)."""
    half_w2 = 0.5 * (w[:, 0] ** 2 + w[:, 1] ** 2)
    denom = e + half_w2
    safe = denom > 1e-300
    pref = np.zeros_like(denom)
    np.divide(e, denom, out=pref, where=safe)
    np.clip(pref, 0.0, 1.0, out=pref)
    surplus = np.maximum(e - half_w2, 0.0)
    return np.where(safe, pref * surplus, 0.0)


class FieldModel:
    """Evaluatable electromagnetic environment b(t,x), grad(ln b)(t,x), E(t,x).

    ``b_floor`` is a guaranteed positive lower bound for b on the model's
    domain of use.  All evaluations are pure functions of (t, x) and safe
    for concurrent read-only use.
    """

    b_floor: float = 1.0

    def b(self, t: float, x: Vec2) -> float:
        raise NotImplementedError

    def grad_log_b(self, t: float, x: Vec2) -> Vec2:
        raise NotImplementedError

    def E(self, t: float, x: Vec2) -> Vec2:
        raise NotImplementedError

    # Array variants, used by the vectorized particle kernels.  X has shape
    # (N, 2); results are (N,) or (N, 2).
    def b_many(self, t: float, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_log_b_many(self, t: float, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def E_many(self, t: float, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def kernel_spec(self):
        """(b_kind, b_param, e_kind) encoding for the compiled kernels.

        Returns None when the model cannot be inlined in compiled code
        (grid-backed electric fields provide their own arrays instead).
        """
        return None


class ConstantB(FieldModel):
    """Homogeneous magnetic field, zero electric field."""

    def __init__(self, b0: float = 1.0):
        if b0 <= 0.0:
            raise ValueError("b0 must be positive")
        self.b0 = b0
        self.b_floor = b0

    def b(self, t, x):
        return self.b0

    def grad_log_b(self, t, x):
        return (0.0, 0.0)

    def E(self, t, x):
        return (0.0, 0.0)

    def b_many(self, t, X):
        return np.full(X.shape[0], self.b0)

    def grad_log_b_many(self, t, X):
        return np.zeros_like(X)

    def E_many(self, t, X):
        return np.zeros_like(X)

    def kernel_spec(self):
        return (0, self.b0, 0)


class ParabolicB(FieldModel):
    """b(x) = 1 + alpha*x1^2, optionally with the shear field E = (0, -x2).

    The magnetic gradient points along x1, so the grad-B drift is along x2;
    with the electric field on, the E x B drift adds a -x2/b component along
    x1.  b >= 1 everywhere.
    """

    def __init__(self, alpha: float = 0.5, with_electric: bool = False):
        if alpha <= 0.0:
            raise ValueError("alpha must be positive")
        self.alpha = alpha
        self.with_electric = with_electric
        self.b_floor = 1.0

    def b(self, t, x):
        return 1.0 + self.alpha * x[0] * x[0]

    def grad_log_b(self, t, x):
        gx = 2.0 * self.alpha * x[0] / (1.0 + self.alpha * x[0] * x[0])
        return (gx, 0.0)

    def E(self, t, x):
        if self.with_electric:
            return (0.0, -x[1])
        return (0.0, 0.0)

    def b_many(self, t, X):
        return 1.0 + self.alpha * X[:, 0] ** 2

    def grad_log_b_many(self, t, X):
        out = np.zeros_like(X)
        out[:, 0] = 2.0 * self.alpha * X[:, 0] / (1.0 + self.alpha * X[:, 0] ** 2)
        return out

    def E_many(self, t, X):
        out = np.zeros_like(X)
        if self.with_electric:
            out[:, 1] = -X[:, 1]
        return out

    def kernel_spec(self):
        return (1, self.alpha, 1 if self.with_electric else 0)


class DiskConfinementB(FieldModel):
    """b(x) = 10 / sqrt(100 - |x|^2): radial, value 1 at the origin.

    Defined only on the open disk |x| < 10; evaluation outside raises
    :class:`FieldDomainError`.  Restricted to |x| <= 6 the floor is 1.
    No external electric field (the self-consistent field is supplied
    separately in the Vlasov-Poisson loop).

    Note the exact particle flow never reaches |x| = 10: b diverges there
    and the gyroradius shrinks to zero, so the growing field itself is the
    confining wall.  The ensemble push kernels rely on this and evaluate a
    bounded continuation beyond |x| = 9.9 to absorb intermediate-stage
    overshoot of near-wall orbits; the model proper stays undefined there.
    """

    b_floor = 1.0

    def b(self, t, x):
        r2 = x[0] * x[0] + x[1] * x[1]
        if r2 >= 100.0:
            raise FieldDomainError(f"position {x} outside |x| < 10")
        return 10.0 / math.sqrt(100.0 - r2)

    def grad_log_b(self, t, x):
        r2 = x[0] * x[0] + x[1] * x[1]
        if r2 >= 100.0:
            raise FieldDomainError(f"position {x} outside |x| < 10")
        # grad(ln b) = x / (100 - |x|^2)
        s = 1.0 / (100.0 - r2)
        return (x[0] * s, x[1] * s)

    def E(self, t, x):
        return (0.0, 0.0)

    def b_many(self, t, X):
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        if np.any(r2 >= 100.0):
            raise FieldDomainError("position outside |x| < 10")
        return 10.0 / np.sqrt(100.0 - r2)

    def grad_log_b_many(self, t, X):
        r2 = X[:, 0] ** 2 + X[:, 1] ** 2
        if np.any(r2 >= 100.0):
            raise FieldDomainError("position outside |x| < 10")
        return X / (100.0 - r2)[:, None]

    def E_many(self, t, X):
        return np.zeros_like(X)

    def kernel_spec(self):
        return (2, 0.0, 0)


MODEL_NAMES = ("ParabolicB_NoE", "ParabolicB_LinearE", "DiskConfinementB", "ConstantB")


def make_model(name: str, alpha: float = 0.5, b0: float = 1.0) -> FieldModel:
    """Build one of the named analytic configurations."""
    if name == "ParabolicB_NoE":
        return ParabolicB(alpha, with_electric=False)
    if name == "ParabolicB_LinearE":
        return ParabolicB(alpha, with_electric=True)
    if name == "DiskConfinementB":
        return DiskConfinementB()
    if name == "ConstantB":
        return ConstantB(b0)
    raise ValueError(f"unknown field model {name!r}; expected one of {MODEL_NAMES}")


def electric_drift(model: FieldModel, t: float, x: Vec2) -> Vec2:
    """E x B drift velocity -perp(E)/b at (t, x)."""
    E = model.E(t, x)
    b = model.b(t, x)
    return (E[1] / b, -E[0] / b)


def full_drift(model: FieldModel, t: float, x: Vec2, g: float) -> Vec2:
    """Slow drift velocity: electric drift plus grad-B drift g*perp(grad b)/b^2."""
    E = model.E(t, x)
    b = model.b(t, x)
    gl = model.grad_log_b(t, x)
    # perp(grad b)/b^2 = perp(grad ln b)/b
    return (E[1] / b - g * gl[1] / b, -E[0] / b + g * gl[0] / b)


def energy_drift_rate(model: FieldModel, t: float, x: Vec2, g: float) -> float:
    """Slow growth rate of the drift kinetic energy: g * (perp(grad b)/b^2) . E."""
    E = model.E(t, x)
    b = model.b(t, x)
    gl = model.grad_log_b(t, x)
    return g * (-gl[1] * E[0] + gl[0] * E[1]) / b
