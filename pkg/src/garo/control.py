"""Closed-loop simulation: inverse-dynamics tracking and receding-horizon MPC."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import DynamicsState
from .ilqr import IlqrProblem, IlqrSolution, LinearSystem, ilqr_solve
from .model import RobotModel


def inverse_dynamics_control(model: RobotModel, q, qd, q_d, qd_d, qdd_d, kp, kd) -> np.ndarray:
    """u = tau(q, qd, qdd_d) + Kp (q_d - q) + Kd (qd_d - qd)."""
    kp = np.atleast_1d(np.asarray(kp, dtype=float))
    kd = np.atleast_1d(np.asarray(kd, dtype=float))
    kp = np.diag(kp) if kp.ndim == 1 else kp
    kd = np.diag(kd) if kd.ndim == 1 else kd
    tau = DynamicsState(model, q, qd).inverse_dynamics(qdd_d)
    return tau + kp @ (np.asarray(q_d) - np.asarray(q)) + kd @ (np.asarray(qd_d) - np.asarray(qd))


def _accel(model: RobotModel, q, qd, tau) -> np.ndarray:
    return DynamicsState(model, q, qd).forward_dynamics(tau)


def rk4_step(model: RobotModel, q, qd, tau, dt: float):
    """One RK4 step of the forward-dynamics plant with torque held over the step."""
    k1q, k1v = qd, _accel(model, q, qd, tau)
    k2q, k2v = qd + 0.5 * dt * k1v, _accel(model, q + 0.5 * dt * k1q, qd + 0.5 * dt * k1v, tau)
    k3q, k3v = qd + 0.5 * dt * k2v, _accel(model, q + 0.5 * dt * k2q, qd + 0.5 * dt * k2v, tau)
    k4q, k4v = qd + dt * k3v, _accel(model, q + dt * k3q, qd + dt * k3v, tau)
    q_next = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    qd_next = qd + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return q_next, qd_next


@dataclass
class PiecewiseAccelerationReference:
    """Joint reference produced by a double-integrator plan (constant acceleration per interval)."""

    q0: np.ndarray
    qd0: np.ndarray
    accelerations: np.ndarray  # (T, N)
    dt: float

    def __post_init__(self):
        t_max = len(self.accelerations)
        self._q = np.empty((t_max + 1, len(self.q0)))
        self._qd = np.empty_like(self._q)
        self._q[0], self._qd[0] = self.q0, self.qd0
        for t, a in enumerate(self.accelerations):
            self._q[t + 1] = self._q[t] + self.dt * self._qd[t] + 0.5 * self.dt**2 * a
            self._qd[t + 1] = self._qd[t] + self.dt * a

    @property
    def duration(self) -> float:
        return len(self.accelerations) * self.dt

    def __call__(self, time: float):
        """(q_d, qd_d, qdd_d) at ``time``; held at rest after the end."""
        k = int(np.floor(time / self.dt + 1e-9))
        if k >= len(self.accelerations):
            return self._q[-1], self._qd[-1], np.zeros_like(self.q0)
        s = time - k * self.dt
        a = self.accelerations[k]
        return self._q[k] + s * self._qd[k] + 0.5 * s * s * a, self._qd[k] + s * a, a


@dataclass
class TrackingResult:
    times: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    q_ref: np.ndarray
    torques: np.ndarray

    @property
    def rms_error(self) -> float:
        return float(np.sqrt(np.mean((self.q - self.q_ref) ** 2)))


def simulate_tracking(model: RobotModel, reference: Callable, duration: float, dt: float, kp, kd, q0=None, qd0=None) -> TrackingResult:
    """Track ``reference(t) -> (q_d, qd_d, qdd_d)`` on the forward-dynamics plant.

    The controller runs at ``dt`` with zero-order-hold torques and the plant is
    integrated with one RK4 step per control period.
    """
    steps = int(round(duration / dt))
    q_d, qd_d, _ = reference(0.0)
    q = np.array(q_d if q0 is None else q0, dtype=float)
    qd = np.array(qd_d if qd0 is None else qd0, dtype=float)
    n = model.dof
    out_q = np.empty((steps + 1, n))
    out_qd = np.empty_like(out_q)
    out_ref = np.empty_like(out_q)
    torques = np.empty((steps, n))
    out_q[0], out_qd[0], out_ref[0] = q, qd, q_d
    for k in range(steps):
        q_d, qd_d, qdd_d = reference(k * dt)
        tau = inverse_dynamics_control(model, q, qd, q_d, qd_d, qdd_d, kp, kd)
        q, qd = rk4_step(model, q, qd, tau, dt)
        torques[k] = tau
        out_q[k + 1], out_qd[k + 1] = q, qd
        out_ref[k + 1] = reference((k + 1) * dt)[0]
    return TrackingResult(np.arange(steps + 1) * dt, out_q, out_qd, out_ref, torques)


# -- model predictive control -----------------------------------------------------


@dataclass
class MpcResult:
    times: np.ndarray
    states: np.ndarray  # (S + 1, n)
    controls: np.ndarray  # (S, m)
    plans: list = field(default_factory=list)  # iLQR iterations per step
    final_plan: IlqrSolution | None = None


def run_mpc(
    system: LinearSystem,
    make_costs: Callable[[], Sequence],
    x0,
    horizon: int,
    steps: int,
    R,
    iters_per_step: int = 10,
    tol: float = 1e-10,
    plant: Callable | None = None,
) -> MpcResult:
    """Nominal receding-horizon control.

    At every step an iLQR problem starting at the current state (and current
    time, for moving targets) is solved warm-started from the shifted
    previous plan; only its first control is applied to the plant.  The
    default plant is the planning system itself.
    """
    plant = system.step if plant is None else plant
    x = np.asarray(x0, dtype=float)
    costs = list(make_costs())
    us = None
    states = [x.copy()]
    controls = []
    iters = []
    sol = None
    for k in range(steps):
        t0 = k * system.dt
        problem = IlqrProblem(system, horizon, costs, R, x, t0)
        sol = ilqr_solve(problem, us, max_iters=iters_per_step, tol=tol)
        u = sol.us[0]
        x = plant(x, u)
        states.append(x.copy())
        controls.append(u)
        iters.append(sol.iterations)
        us = np.vstack([sol.us[1:], sol.us[-1:]])
    return MpcResult(np.arange(steps + 1) * system.dt, np.array(states), np.array(controls), iters, sol)
