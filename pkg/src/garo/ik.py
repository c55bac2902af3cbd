"""Gauss-Newton inverse kinematics on the motor manifold.

The residual is the screw bivector ``f(q) = log(~T M(q))`` between the target
motor ``T`` and the forward kinematics; the cost is ``|f|^2``.  Its Jacobian
chains the log-map Jacobian (6 x 8) with the embedded analytic Jacobian
``~T dM/dq`` (8 x N).

The solver is vectorised: :func:`solve_ik_batch` advances many independent
problems in lock step (each with its own step length and damping), and
:func:`solve_ik` is the single-problem case.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import MOTOR, Multivector
from .embedding import embed
from .kinematics import analytic_jacobian, forward_kinematics
from .model import RobotModel
from .motors import log_jacobian, log_motor

ARMIJO = 1e-4
MAX_HALVINGS = 20
LAMBDA_INIT = 1e-9
LAMBDA_GROWTH = 10.0
STEP_TOL = 1e-12
# below this m1 the log map is at its branch point; such iterates are rejected
BRANCH_GUARD = -1.0 + 1e-12


def ik_residual(model: RobotModel, q, target: Multivector) -> np.ndarray:
    """log(~T M(q)) as a 6-vector (batched over leading axes of q)."""
    err = (target.reverse() * forward_kinematics(model, q)).cast(MOTOR)
    return log_motor(err).coeffs


def ik_cost(model: RobotModel, q, target: Multivector) -> np.ndarray:
    f = ik_residual(model, q, target)
    return np.sum(f * f, axis=-1)


def motor_jacobian(model: RobotModel, q, target: Multivector) -> np.ndarray:
    """Embedded ~T dM/dq, shape (..., 8, N)."""
    tr = target.reverse()
    if tr.shape:
        tr = tr.expand(-1)
    ja = (tr * analytic_jacobian(model, q)).cast(MOTOR)
    if len(ja.shape) == 1:
        return embed(ja)
    return np.swapaxes(ja.coeffs, -1, -2)


def ik_jacobian(model: RobotModel, q, target: Multivector) -> np.ndarray:
    """d log(~T M(q)) / dq, shape (..., 6, N)."""
    err = (target.reverse() * forward_kinematics(model, q)).cast(MOTOR)
    return log_jacobian(err) @ motor_jacobian(model, q, target)


def _residual_and_jacobian(model, q, target):
    """Residual (B, 6), Jacobian (B, 6, N), validity mask for a batch of states."""
    err = (target.reverse() * forward_kinematics(model, q)).cast(MOTOR)
    valid = err.coeffs[..., 0] > BRANCH_GUARD
    safe = Multivector(MOTOR, np.where(valid[..., None], err.coeffs, np.array([1.0, 0, 0, 0, 0, 0, 0, 0])))
    f = log_motor(safe).coeffs
    jac = log_jacobian(safe) @ motor_jacobian(model, q, target)
    return f, jac, valid


def _cost(model, q, target):
    err = (target.reverse() * forward_kinematics(model, q)).cast(MOTOR)
    valid = err.coeffs[..., 0] > BRANCH_GUARD
    safe = Multivector(MOTOR, np.where(valid[..., None], err.coeffs, np.array([1.0, 0, 0, 0, 0, 0, 0, 0])))
    f = log_motor(safe).coeffs
    return np.where(valid, np.sum(f * f, axis=-1), np.inf)


@dataclass
class IkReport:
    q_final: np.ndarray
    final_cost: float
    iterations: int
    converged: bool
    cost_trace: list = field(default_factory=list)


@dataclass
class IkBatchReport:
    q_final: np.ndarray  # (B, N)
    final_cost: np.ndarray  # (B,)
    iterations: np.ndarray  # (B,)
    converged: np.ndarray  # (B,)
    cost_trace: np.ndarray  # (B, max_iters + 1), NaN after termination

    def __getitem__(self, i) -> IkReport:
        trace = self.cost_trace[i]
        return IkReport(self.q_final[i], float(self.final_cost[i]), int(self.iterations[i]), bool(self.converged[i]), list(trace[~np.isnan(trace)]))


def solve_ik_batch(
    model: RobotModel,
    targets: Multivector,
    q0,
    tol: float = 1e-6,
    max_iters: int = 100,
    stop_cost: float | None = None,
) -> IkBatchReport:
    """Damped Gauss-Newton with Armijo backtracking for B independent problems.

    ``targets`` is a (B,) batch of motors and ``q0`` has shape (B, N).  Each
    problem iterates q <- q - alpha (J^T J + lambda I)^-1 J^T f until its cost
    drops to ``stop_cost``, its step falls below 1e-12, or ``max_iters`` is
    reached.  A problem counts as converged when its final cost is at most
    ``tol``.  ``stop_cost`` defaults to ``tol**2``, i.e. iteration continues
    until the residual norm itself is below ``tol``; with quadratic
    convergence this costs about one extra iteration.
    """
    stop_cost = tol * tol if stop_cost is None else stop_cost
    q = np.array(q0, dtype=float, copy=True)
    b, n = q.shape
    targets = targets.cast(MOTOR)
    lam = np.full(b, LAMBDA_INIT)
    iters = np.zeros(b, dtype=int)
    trace = np.full((b, max_iters + 1), np.nan)
    cost = _cost(model, q, targets)
    trace[:, 0] = cost
    active = cost > stop_cost
    eye = np.eye(n)

    for it in range(max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        qa, ta = q[idx], targets[idx]
        f, jac, _ = _residual_and_jacobian(model, qa, ta)
        jt = np.swapaxes(jac, -1, -2)
        grad = np.einsum("bij,bj->bi", jt, f)
        h = jt @ jac + lam[idx, None, None] * eye
        step = np.linalg.solve(h, grad[..., None])[..., 0]
        slope = np.einsum("bi,bi->b", grad, step)  # half the cost decrease rate along -step
        c0 = cost[idx]
        alpha = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        new_cost = c0.copy()
        for _ in range(MAX_HALVINGS + 1):
            pending = np.flatnonzero(~accepted)
            if pending.size == 0:
                break
            trial_q = qa[pending] - alpha[pending, None] * step[pending]
            tc = _cost(model, trial_q, ta[pending])
            ok = tc <= c0[pending] - ARMIJO * 2.0 * alpha[pending] * slope[pending]
            hit = pending[ok]
            accepted[hit] = True
            new_cost[hit] = tc[ok]
            alpha[pending[~ok]] *= 0.5
        iters[idx] += 1
        # accepted steps update q; failed backtracks raise the damping
        acc_idx = idx[accepted]
        q[acc_idx] = qa[accepted] - alpha[accepted, None] * step[accepted]
        cost[acc_idx] = new_cost[accepted]
        lam[acc_idx] = LAMBDA_INIT
        lam[idx[~accepted]] *= LAMBDA_GROWTH
        trace[idx, it + 1] = cost[idx]
        step_norm = alpha * np.linalg.norm(step, axis=-1)
        tiny = (step_norm < STEP_TOL) & accepted
        active[idx] = (cost[idx] > stop_cost) & ~tiny

    converged = cost <= tol
    return IkBatchReport(q, cost, iters, converged, trace)


def solve_ik(
    model: RobotModel, target: Multivector, q0, tol: float = 1e-6, max_iters: int = 100, stop_cost: float | None = None
) -> IkReport:
    t = Multivector(MOTOR, target.cast(MOTOR).coeffs[None])
    rep = solve_ik_batch(model, t, np.asarray(q0, dtype=float)[None], tol, max_iters, stop_cost)
    return rep[0]
