"""Forward kinematics and Jacobians of serial chains as motor products.

All functions accept joint vectors with arbitrary leading batch dimensions,
``q.shape == (..., N)``; multivector results carry the same batch shape with
one extra axis for the joint index where a per-joint quantity is returned.
"""

from __future__ import annotations

import numpy as np

from .algebra import E0, MOTOR, ROTATION, SCREW, Multivector, extract_point, sandwich
from .errors import DomainError
from .model import RobotModel
from .motors import identity_motor, make_rotor


def _q(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1:] != (model.dof,):
        raise DomainError(f"expected {model.dof} joint values, got shape {q.shape}")
    return q


def joint_rotors(model: RobotModel, q) -> Multivector:
    """R_i(q_i) for every joint, shape (..., N)."""
    return make_rotor(model.planes, _q(model, q))


def joint_motors(model: RobotModel, q) -> Multivector:
    """M_i(q_i) = M_F,i R_i(q_i), shape (..., N)."""
    return (model.frames * joint_rotors(model, q)).cast(MOTOR)


def chain_motors(model: RobotModel, q) -> Multivector:
    """Prefix products M^k = M_1 ... M_k for k = 1..N, shape (..., N)."""
    return chain_motors_from(joint_motors(model, q))


def chain_motors_from(motors: Multivector) -> Multivector:
    """Running products of a (..., N) sequence of motors."""
    out = np.empty(motors.coeffs.shape)
    acc = motors[..., 0]
    out[..., 0, :] = acc.coeffs
    for k in range(1, motors.shape[-1]):
        acc = (acc * motors[..., k]).cast(MOTOR)
        out[..., k, :] = acc.coeffs
    return Multivector(MOTOR, out)


def _shift_prefix(prefix: Multivector) -> Multivector:
    """M^{k-1} for k = 1..N (identity first)."""
    c = np.empty(prefix.coeffs.shape)
    c[..., 0, :] = identity_motor().coeffs
    c[..., 1:, :] = prefix.coeffs[..., :-1, :]
    return Multivector(MOTOR, c)


def _suffix(model: RobotModel, motors: Multivector) -> Multivector:
    """M_{k+1} ... M_N M_tool for k = 1..N."""
    out = np.empty(motors.coeffs.shape)
    acc = model.tool
    n = model.dof
    for k in range(n - 1, -1, -1):
        out[..., k, :] = np.broadcast_to(acc.coeffs, out[..., k, :].shape)
        acc = (motors[..., k] * acc).cast(MOTOR)
    return Multivector(MOTOR, out)


def forward_kinematics(model: RobotModel, q) -> Multivector:
    """End-effector motor M(q) = prod_i M_F,i R_i(q_i), followed by the tool frame."""
    prefix = chain_motors(model, q)
    return (prefix[..., model.dof - 1] * model.tool).cast(MOTOR)


def forward_kinematics_to(model: RobotModel, q, k: int) -> Multivector:
    """M^k(q), the chain up to and including joint k (1-based)."""
    if not 1 <= k <= model.dof:
        raise DomainError(f"joint index {k} outside 1..{model.dof}")
    m = joint_motors(model, q)
    acc = m[..., 0]
    for i in range(1, k):
        acc = (acc * m[..., i]).cast(MOTOR)
    return acc


def analytic_jacobian(model: RobotModel, q) -> Multivector:
    """dM/dq_i = M_1 ... M_F,i (-B_i / 2) R_i(q_i) ... M_N, shape (..., N) of motors."""
    q = _q(model, q)
    rotors = joint_rotors(model, q)
    motors = (model.frames * rotors).cast(MOTOR)
    prefix = chain_motors_from(motors)
    before = _shift_prefix(prefix)
    after = _suffix(model, motors)
    half_b = Multivector(ROTATION, -0.5 * model.planes)
    cols = before * model.frames * half_b * rotors * after
    return cols.cast(MOTOR)


def rotation_bivectors(model: RobotModel, q, prefix: Multivector | None = None) -> Multivector:
    """B'_i = (M^{i-1} M_F,i) B_i (M^{i-1} M_F,i)~, shape (..., N)."""
    if prefix is None:
        prefix = chain_motors(model, q)
    w = (_shift_prefix(prefix) * model.frames).cast(MOTOR)
    return sandwich(w, Multivector(ROTATION, model.planes))


def geometric_jacobian(model: RobotModel, q, j: int | None = None) -> Multivector:
    """[B'_1 ... B'_j 0 ... 0] as a (..., N) bivector row."""
    n = model.dof
    j = n if j is None else j
    if not 1 <= j <= n:
        raise DomainError(f"joint index {j} outside 1..{n}")
    b = rotation_bivectors(model, q)
    if j < n:
        c = b.coeffs.copy()
        c[..., j:, :] = 0.0
        b = Multivector(b.blades, c)
    return b


def rotation_bivectors_dt(model: RobotModel, q, qd, bprime: Multivector | None = None) -> Multivector:
    """dB'_i/dt = sum_{j<i} (B'_i x B'_j) qd_j, shape (..., N)."""
    qd = _q(model, qd)
    if bprime is None:
        bprime = rotation_bivectors(model, q)
    cross = commutator_matrix(bprime)  # (..., N, N)
    mask = np.tril(np.ones((model.dof, model.dof)), -1)
    c = np.einsum("...ijk,ij,...j->...ik", cross.coeffs, mask, qd)
    return Multivector(cross.blades, c)


def commutator_matrix(bprime: Multivector) -> Multivector:
    """J^x_ij = B'_i x B'_j, shape (..., N, N)."""
    return bprime.expand(-1).commutator(bprime.expand(-2)).cast(SCREW)


def geometric_jacobian_dt(model: RobotModel, q, qd, bprime: Multivector | None = None) -> Multivector:
    """Lower-triangular (..., N, N) matrix whose row i is [dB'_1 ... dB'_i 0 ... 0]."""
    bd = rotation_bivectors_dt(model, q, qd, bprime)
    n = model.dof
    mask = np.tril(np.ones((n, n)))
    c = bd.coeffs[..., None, :, :] * mask[..., None]
    return Multivector(bd.blades, c)


def end_effector_point(model: RobotModel, q) -> np.ndarray:
    return extract_point(sandwich(forward_kinematics(model, q), E0))
