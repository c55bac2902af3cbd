"""Conformal geometric algebra for serial-manipulator kinematics, dynamics and optimal control."""

from .algebra import (
    E0,
    EI,
    I,
    Multivector,
    commutator,
    dual,
    embed_point,
    extract_point,
    geometric_product,
    grade_project,
    inner_product,
    outer_product,
    reverse,
    sandwich,
)
from .dynamics import forward_dynamics, gravity_forces, inertia_matrix, inertia_matrix_dt, inverse_dynamics, mass_matrix
from .errors import ConfigError, ContractViolation, DegeneracyError, DomainError, GaroError, ModelLoadError, NumericalError
from .ik import solve_ik, solve_ik_batch
from .kinematics import analytic_jacobian, forward_kinematics, forward_kinematics_to, geometric_jacobian, geometric_jacobian_dt
from .model import RobotModel, load_model
from .motors import exp_bivector, log_jacobian, log_motor, make_rotor, make_translator, motor_interpolate, normalize_motor

__version__ = "0.1.0"

__all__ = [
    "E0",
    "EI",
    "I",
    "Multivector",
    "commutator",
    "dual",
    "embed_point",
    "extract_point",
    "geometric_product",
    "grade_project",
    "inner_product",
    "outer_product",
    "reverse",
    "sandwich",
    "forward_dynamics",
    "gravity_forces",
    "inertia_matrix",
    "inertia_matrix_dt",
    "inverse_dynamics",
    "mass_matrix",
    "ConfigError",
    "ContractViolation",
    "DegeneracyError",
    "DomainError",
    "GaroError",
    "ModelLoadError",
    "NumericalError",
    "solve_ik",
    "solve_ik_batch",
    "analytic_jacobian",
    "forward_kinematics",
    "forward_kinematics_to",
    "geometric_jacobian",
    "geometric_jacobian_dt",
    "RobotModel",
    "load_model",
    "exp_bivector",
    "log_jacobian",
    "log_motor",
    "make_rotor",
    "make_translator",
    "motor_interpolate",
    "normalize_motor",
]
