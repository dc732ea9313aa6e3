"""Asymptotic-preserving particle-in-cell toolkit for strongly magnetized 2D plasmas."""

from .fields import (
    ConstantB,
    DiskConfinementB,
    FieldDomainError,
    FieldModel,
    ParabolicB,
    electric_drift,
    energy_drift_rate,
    energy_surplus,
    full_drift,
    make_model,
    perp,
)
from .integrators import (
    GuidingCenterState,
    NonFiniteStateError,
    ParticleState,
    SchemeParams,
    integrate_trajectory,
    make_stepper,
    solve_rotation_system,
    step_limit,
    step_order1,
    step_order2,
    step_order3,
    step_reference,
)

__version__ = "0.1.0"
