"""Iterative LQR with Gauss-Newton cost quadraticization.

The problem is

    min_u  sum_{t=1..T} sum_c l_c(x_t) + sum_{t=0..T-1} u_t^T R u_t

subject to ``x_{t+1} = f(x_t, u_t)`` from a fixed ``x_0``.  Each state cost
supplies residuals and Jacobians; the backward pass uses ``2 J^T W J`` as the
state Hessian, so for linear dynamics and quadratic costs one iteration from
any initial guess lands on the exact LQR solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .costs import StateCost, resolve_steps
from .errors import NumericalError

log = logging.getLogger(__name__)

MU_MIN = 1e-6
MU_MAX = 1e10
MU_GROWTH = 10.0
LINE_SEARCH = tuple(0.5**k for k in range(12))


@dataclass
class LinearSystem:
    """x_{t+1} = A x_t + C u_t with sampling period ``dt``."""

    A: np.ndarray
    C: np.ndarray
    dt: float

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.C.shape[1]

    def step(self, x, u) -> np.ndarray:
        return x @ self.A.T + u @ self.C.T

    def jacobians(self, x, u):
        return self.A, self.C

    def rollout(self, x0, us) -> np.ndarray:
        xs = np.empty((len(us) + 1, self.state_dim))
        xs[0] = x0
        for t, u in enumerate(us):
            xs[t + 1] = self.step(xs[t], u)
        return xs


def double_integrator(dim: int, dt: float) -> LinearSystem:
    """Exact zero-order-hold discretisation of ``p'' = u`` in ``dim`` coordinates.

    The state stacks positions and velocities, ``x = [p, v]``.
    """
    if dim < 1 or not dt > 0:
        raise ValueError("double_integrator needs dim >= 1 and dt > 0")
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    a = np.block([[eye, dt * eye], [zero, eye]])
    c = np.vstack([0.5 * dt * dt * eye, dt * eye])
    return LinearSystem(a, c, dt)


@dataclass
class IlqrProblem:
    system: LinearSystem
    horizon: int
    costs: Sequence[StateCost]
    R: np.ndarray
    x0: np.ndarray
    t0: float = 0.0  # absolute time of x0, used by moving targets

    def __post_init__(self):
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if self.R.shape == (1, 1) and self.system.input_dim > 1:
            self.R = self.R[0, 0] * np.eye(self.system.input_dim)
        if np.linalg.eigvalsh(0.5 * (self.R + self.R.T))[0] <= 0.0:
            raise ValueError("control weight R must be positive definite")
        self.x0 = np.asarray(self.x0, dtype=float)
        self._steps = [resolve_steps(c.steps, self.horizon) for c in self.costs]

    def times(self, steps: np.ndarray) -> np.ndarray:
        return self.t0 + steps * self.system.dt

    def state_cost(self, xs) -> float:
        total = 0.0
        for cost, steps in zip(self.costs, self._steps):
            total += float(np.sum(cost.value(xs[steps], self.times(steps))))
        return total

    def total_cost(self, xs, us) -> float:
        return self.state_cost(xs) + float(np.einsum("ti,ij,tj->", us, self.R, us))

    def quadraticize(self, xs):
        """Gauss-Newton gradient and Hessian of the state cost at every step."""
        n = self.system.state_dim
        lx = np.zeros((self.horizon + 1, n))
        lxx = np.zeros((self.horizon + 1, n, n))
        for cost, steps in zip(self.costs, self._steps):
            _, g, h = cost.evaluate(xs[steps], self.times(steps))
            np.add.at(lx, steps, g)
            np.add.at(lxx, steps, h)
        return lx, lxx


@dataclass
class IlqrSolution:
    xs: np.ndarray
    us: np.ndarray
    cost: float
    cost_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    gains: np.ndarray | None = None


def _backward(problem: IlqrProblem, xs, us, lx, lxx, mu: float):
    sys = problem.system
    r2 = 2.0 * problem.R
    t_max = problem.horizon
    k_ff = np.zeros((t_max, sys.input_dim))
    k_fb = np.zeros((t_max, sys.input_dim, sys.state_dim))
    vx = lx[t_max].copy()
    vxx = lxx[t_max].copy()
    expected = 0.0
    for t in range(t_max - 1, -1, -1):
        a, c = sys.jacobians(xs[t], us[t])
        qx = lx[t] + a.T @ vx
        qu = r2 @ us[t] + c.T @ vx
        qxx = lxx[t] + a.T @ vxx @ a
        qux = c.T @ vxx @ a
        quu = r2 + c.T @ vxx @ c
        quu_reg = quu + mu * np.eye(sys.input_dim)
        try:
            low = np.linalg.cholesky(quu_reg)
        except np.linalg.LinAlgError:
            return None
        sol = np.linalg.solve(low.T, np.linalg.solve(low, np.column_stack([qu, qux])))
        k = -sol[:, 0]
        kk = -sol[:, 1:]
        k_ff[t], k_fb[t] = k, kk
        vx = qx + kk.T @ quu @ k + kk.T @ qu + qux.T @ k
        vxx = qxx + kk.T @ quu @ kk + kk.T @ qux + qux.T @ kk
        vxx = 0.5 * (vxx + vxx.T)
        expected += k @ qu + 0.5 * k @ quu @ k
    return k_ff, k_fb, expected


def _forward(problem: IlqrProblem, xs, us, k_ff, k_fb, alpha: float):
    sys = problem.system
    new_x = np.empty_like(xs)
    new_u = np.empty_like(us)
    new_x[0] = xs[0]
    for t in range(problem.horizon):
        new_u[t] = us[t] + alpha * k_ff[t] + k_fb[t] @ (new_x[t] - xs[t])
        new_x[t + 1] = sys.step(new_x[t], new_u[t])
    return new_x, new_u


def ilqr_solve(problem: IlqrProblem, us_init=None, max_iters: int = 100, tol: float = 1e-10) -> IlqrSolution:
    """Minimise the problem cost; accepted iterations never increase it.

    Regularisation ``mu`` on the control Hessian starts at zero (so a purely
    quadratic problem is solved exactly in one step) and grows by a factor of
    ten from ``1e-6`` whenever the Hessian is not positive definite or the line
    search finds no decrease.  Convergence is declared when the relative cost
    decrease of an accepted step, or the predicted decrease, drops below
    ``tol``.
    """
    sys = problem.system
    us = np.zeros((problem.horizon, sys.input_dim)) if us_init is None else np.array(us_init, dtype=float)
    xs = sys.rollout(problem.x0, us)
    cost = problem.total_cost(xs, us)
    trace = [cost]
    mu = 0.0
    converged = False
    gains = None
    it = 0
    for it in range(1, max_iters + 1):
        lx, lxx = problem.quadraticize(xs)
        back = _backward(problem, xs, us, lx, lxx, mu)
        while back is None:
            mu = max(MU_MIN, mu * MU_GROWTH)
            if mu > MU_MAX:
                raise NumericalError("iLQR control Hessian not positive definite after maximal regularisation")
            back = _backward(problem, xs, us, lx, lxx, mu)
        k_ff, k_fb, expected = back
        gains = k_fb
        if -expected <= tol * max(1.0, abs(cost)):
            converged = True
            break
        accepted = False
        for alpha in LINE_SEARCH:
            new_x, new_u = _forward(problem, xs, us, k_ff, k_fb, alpha)
            new_cost = problem.total_cost(new_x, new_u)
            if new_cost < cost:
                accepted = True
                break
        if not accepted:
            mu = max(MU_MIN, mu * MU_GROWTH)
            if mu > MU_MAX:
                log.debug("iLQR line search failed at maximal regularisation")
                break
            continue
        improvement = cost - new_cost
        xs, us, cost = new_x, new_u, new_cost
        trace.append(cost)
        mu = 0.0 if mu <= MU_MIN else mu / MU_GROWTH
        if improvement <= tol * max(1.0, abs(cost)):
            converged = True
            break
    return IlqrSolution(xs, us, cost, trace, it, converged, gains)
