"""Task costs for optimal control, written as weighted residuals.

A state cost evaluates, for a batch of states ``xs`` (S, n) at absolute
times ``times`` (S,), the residuals ``r`` (S, K) and their state Jacobians
``J`` (S, K, n).  The scalar cost of one state is ``r^T W r``.

The reaching residual is the outer product ``X_d ^ M X ~M`` of the target
primitive with the motor-transformed tool primitive, flattened over the blade
set predicted for that pair.  It vanishes exactly when the moved tool lies in
the outer-product null space of the target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .algebra import (
    E0,
    EI,
    EUCLIDEAN,
    MOTOR,
    ROTATION,
    Multivector,
    embed_point,
    product_blades,
    sandwich,
    sandwich_blades,
)
from .embedding import embed
from .errors import DomainError
from .kinematics import analytic_jacobian, forward_kinematics
from .model import RobotModel
from .motors import exp_bivector, exp_jacobian, log_jacobian, log_motor
from .primitives import circle_center, circle_squared_radius, make_line, plane_normal

Target = Union[Multivector, Callable[[np.ndarray], Multivector]]


# -- step sets ------------------------------------------------------------------


def resolve_steps(steps, horizon: int) -> np.ndarray:
    """Time indices (1..horizon) a cost applies to.

    ``"running"`` is 1..T-1, ``"final"`` is T, ``"all"`` is 1..T; a sequence of
    integers is taken literally (negative values count back from T + 1).
    """
    if isinstance(steps, str):
        if steps == "running":
            return np.arange(1, horizon)
        if steps == "final":
            return np.array([horizon])
        if steps == "all":
            return np.arange(1, horizon + 1)
        raise ValueError(f"unknown step set {steps!r}")
    idx = np.array([s if s >= 0 else horizon + 1 + s for s in steps], dtype=int)
    if np.any((idx < 1) | (idx > horizon)):
        raise ValueError(f"step indices must lie in 1..{horizon}")
    return np.unique(idx)


def _weight_matrix(weight, k: int) -> np.ndarray:
    w = np.asarray(weight, dtype=float)
    if w.ndim == 0:
        return float(w) * np.eye(k)
    if w.ndim == 1:
        return np.diag(w)
    return w


class StateCost:
    """Base class: subclasses implement :meth:`residuals`."""

    steps = "all"
    weight = 1.0

    def residuals(self, xs: np.ndarray, times: np.ndarray):
        raise NotImplementedError

    def weight_matrix(self, k: int) -> np.ndarray:
        return _weight_matrix(self.weight, k)

    def evaluate(self, xs, times):
        """Cost per state (S,) together with the Gauss-Newton gradient (S, n) and Hessian (S, n, n)."""
        r, jac = self.residuals(xs, times)
        w = self.weight_matrix(r.shape[-1])
        wr = r @ w.T
        cost = np.einsum("sk,sk->s", r, wr)
        grad = 2.0 * np.einsum("skn,sk->sn", jac, wr)
        hess = 2.0 * np.einsum("skn,kl,slm->snm", jac, w, jac)
        return cost, grad, hess

    def value(self, xs, times) -> np.ndarray:
        r, _ = self.residuals(xs, times)
        w = self.weight_matrix(r.shape[-1])
        return np.einsum("sk,kl,sl->s", r, w, r)


def _target_at(target: Target, times: np.ndarray) -> Multivector:
    if callable(target) and not isinstance(target, Multivector):
        return target(np.asarray(times, dtype=float))
    return target


# -- quadratic state cost -------------------------------------------------------


@dataclass
class QuadraticStateCost(StateCost):
    """(S x - x_ref)^T W (S x - x_ref) with an optional row selection S."""

    reference: np.ndarray
    weight: object = 1.0
    steps: object = "all"
    select: np.ndarray | None = None

    def residuals(self, xs, times):
        xs = np.asarray(xs, dtype=float)
        sel = np.eye(xs.shape[-1]) if self.select is None else np.asarray(self.select, dtype=float)
        r = xs @ sel.T - np.asarray(self.reference, dtype=float)
        return r, np.broadcast_to(sel, r.shape[:1] + sel.shape)


def velocity_cost(dof: int, weight=1.0, steps="final") -> QuadraticStateCost:
    """Penalise the velocity half of a double-integrator state."""
    sel = np.hstack([np.zeros((dof, dof)), np.eye(dof)])
    return QuadraticStateCost(np.zeros(dof), weight, steps, sel)


# -- motor pose cost on the bivector double integrator --------------------------


def _left_multiply(a: Multivector, cols: Multivector) -> np.ndarray:
    """Embedded a * cols[j] for a (..., J) row of motors -> (..., 8, J)."""
    prod = (a.expand(-1) * cols).cast(MOTOR)
    return np.swapaxes(prod.coeffs, -1, -2)


def motor_pose_error(b, target: Multivector) -> np.ndarray:
    """log(~T exp(B(b))) as a 6-vector."""
    m = exp_bivector(b)
    return log_motor((target.reverse() * m).cast(MOTOR)).coeffs


def motor_pose_cost(b, target: Multivector):
    """(|e|^2, e) with e = log(~T exp(B(b)))."""
    e = motor_pose_error(b, target)
    return np.sum(e * e, axis=-1), e


def motor_pose_jacobian(b, target: Multivector) -> np.ndarray:
    """de/db (..., 6, 6), chained through the exp and log differentials."""
    b = np.asarray(b, dtype=float)
    err = (target.reverse() * exp_bivector(b)).cast(MOTOR)
    dexp = Multivector(MOTOR, np.swapaxes(exp_jacobian(b), -1, -2))
    return log_jacobian(err) @ _left_multiply(target.reverse(), dexp)


@dataclass
class MotorPoseCost(StateCost):
    """Pose cost for a state whose first six entries are screw parameters."""

    target: Target
    weight: object = 1.0
    steps: object = "final"

    def residuals(self, xs, times):
        xs = np.asarray(xs, dtype=float)
        b = xs[..., :6]
        target = _target_at(self.target, times)
        if target.shape:
            target = target.cast(MOTOR)
        r = motor_pose_error(b, target)
        jac = np.zeros(r.shape + (xs.shape[-1],))
        jac[..., :6] = motor_pose_jacobian(b, target)
        return r, jac


# -- uniform reaching cost ------------------------------------------------------


def tool_point() -> Multivector:
    """The origin e0 of the end-effector frame."""
    return E0


def tool_line() -> Multivector:
    """Line through the end-effector origin along its z-axis, e0 ^ C(0,0,1) ^ ei."""
    return make_line(E0, embed_point([0.0, 0.0, 1.0]))


def reach_blades(x: Multivector, x_d: Multivector) -> tuple:
    """Blade set of X_d ^ (M X ~M) for an arbitrary motor M."""
    return product_blades("op", x_d.blades, sandwich_blades(x.blades))


def _moved(m: Multivector, ja: Multivector, x: Multivector):
    """M X ~M and its joint derivatives J_i X ~M + M X ~J_i."""
    value = sandwich(m, x)
    mr = m.reverse().expand(-1)
    d = ja * x * mr + m.expand(-1) * x * ja.reverse()
    return value, d


def _joints(model: RobotModel, q):
    q = np.asarray(q, dtype=float)
    return forward_kinematics(model, q), analytic_jacobian(model, q)


def reach_terms(model: RobotModel, q, x: Multivector, x_d: Multivector):
    """Embedded reaching residual (..., K) and Jacobian (..., K, N)."""
    q = np.asarray(q, dtype=float)
    blades = reach_blades(x, x_d)
    m, ja = _joints(model, q)
    value, d = _moved(m, ja, x)
    err = (x_d ^ value).cast(blades).coeffs
    dj = ((x_d.expand(-1) if x_d.shape else x_d) ^ d).cast(blades).coeffs
    return err, np.swapaxes(dj, -1, -2)


def reach_error(model: RobotModel, q, x: Multivector, x_d: Multivector) -> np.ndarray:
    """embed(X_d ^ M(q) X ~M(q)) over the predicted blade set."""
    q = np.asarray(q, dtype=float)
    blades = reach_blades(x, x_d)
    e = x_d ^ sandwich(forward_kinematics(model, q), x)
    if q.ndim == 1:
        return embed(e, blades)[:, 0]
    return e.cast(blades).coeffs


def reach_jacobian(model: RobotModel, q, x: Multivector, x_d: Multivector) -> np.ndarray:
    """embed(X_d ^ (J^A X ~M + M X ~J^A)), shape (K, N)."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1:
        return reach_terms(model, q, x, x_d)[1]
    m, ja = _joints(model, q)
    _, d = _moved(m, ja, x)
    return embed(x_d ^ d, reach_blades(x, x_d))


@dataclass
class ReachCost(StateCost):
    """Weighted |X_d ^ M(q) X ~M(q)|^2 on the joint part of the state.

    ``target`` may be a fixed primitive or a function of time returning a
    batch of primitives (a scripted moving target).
    """

    model: RobotModel
    target: Target
    tool: Multivector = E0
    weight: object = 1.0
    steps: object = "final"

    def residuals(self, xs, times):
        xs = np.asarray(xs, dtype=float)
        n = self.model.dof
        x_d = _target_at(self.target, times)
        r, jq = reach_terms(self.model, xs[..., :n], self.tool, x_d)
        jac = np.zeros(r.shape + (xs.shape[-1],))
        jac[..., :n] = jq
        return r, jac


def pointing_cost(model: RobotModel, target: Target, weight=1.0, steps="final") -> ReachCost:
    """Keep the target point on the end-effector z-axis."""
    return ReachCost(model, target, tool_line(), weight, steps)


def pointing_error(model: RobotModel, q, target_point: Multivector) -> np.ndarray:
    return reach_error(model, q, tool_line(), target_point)


# -- circular grasp ----------------------------------------------------------

GRASP_BLOCKS = ("on_circle", "radial", "normal")


@dataclass
class GraspGeometry:
    """Quantities derived once from the target circle."""

    circle: Multivector  # scaled to unit coefficient norm
    plane: Multivector
    plane_inverse: Multivector
    center: np.ndarray
    normal: np.ndarray
    radius: float

    @classmethod
    def from_circle(cls, circle: Multivector) -> "GraspGeometry":
        scale = float(circle.norm())
        if not scale > 1e-12:
            raise DomainError("degenerate circle")
        circle = circle / scale
        plane = circle ^ EI
        e2 = float((plane * plane).scalar_part())
        r2 = float(circle_squared_radius(circle))
        if not r2 > 0.0:
            raise DomainError("circle has zero or imaginary radius")
        return cls(circle, plane, plane / e2, circle_center(circle), plane_normal(plane), float(np.sqrt(r2)))


def _euclid(x: Multivector) -> np.ndarray:
    return x.cast(EUCLIDEAN).coeffs


def grasp_terms(model: RobotModel, q, geometry: GraspGeometry):
    """Residual blocks and their joint Jacobians for the circular grasp.

    * on_circle (5): C ^ P with P the end-effector point.
    * radial (3): (y ^ r) / radius, where y is the end-effector y-axis and r
      runs from the circle centre to P projected into the circle plane with
      P' = (E . P) E^-1.
    * normal (3): z + n, zero when the end-effector z-axis opposes the
      circle normal.

    Returns two dicts keyed by :data:`GRASP_BLOCKS` with arrays (..., K) and
    (..., K, N).
    """
    q = np.asarray(q, dtype=float)
    m, ja = _joints(model, q)
    g = geometry
    point, dpoint = _moved(m, ja, E0)
    yaxis, dy = _moved(m, ja, Multivector.blade("e2"))
    zaxis, dz = _moved(m, ja, Multivector.blade("e3"))

    on_blades = reach_blades(E0, g.circle)
    on = (g.circle ^ point).cast(on_blades).coeffs
    don = (g.circle ^ dpoint).cast(on_blades).coeffs

    proj = (g.plane | point) * g.plane_inverse
    dproj = (g.plane | dpoint) * g.plane_inverse
    w = -(proj | EI).scalar_part()
    dw = -(dproj | EI).scalar_part()
    x = _euclid(proj) / w[..., None]
    dx = _euclid(dproj) / w[..., None, None] - _euclid(proj)[..., None, :] * (dw / w[..., None] ** 2)[..., None]
    r = Multivector(EUCLIDEAN, (x - g.center) / g.radius)
    dr = Multivector(EUCLIDEAN, dx / g.radius)
    y = yaxis.cast(EUCLIDEAN)
    radial = (y ^ r).cast(ROTATION).coeffs
    rr = Multivector(r.blades, r.coeffs[..., None, :])
    dradial = ((dy.cast(EUCLIDEAN) ^ rr) + (y.expand(-1) ^ dr)).cast(ROTATION).coeffs

    normal = _euclid(zaxis) + g.normal
    dnormal = _euclid(dz)

    values = {"on_circle": on, "radial": radial, "normal": normal}
    jacs = {
        "on_circle": np.swapaxes(don, -1, -2),
        "radial": np.swapaxes(dradial, -1, -2),
        "normal": np.swapaxes(dnormal, -1, -2),
    }
    return values, jacs


def grasp_error(model: RobotModel, q, circle: Multivector) -> dict:
    """Per-constraint grasp residuals for a target circle."""
    values, _ = grasp_terms(model, q, GraspGeometry.from_circle(circle))
    return values


@dataclass
class GraspCost(StateCost):
    """Stacked circular-grasp residual with an independent weight per block."""

    model: RobotModel
    circle: Multivector
    block_weights: Sequence[float] = (1.0, 1.0, 1.0)
    steps: object = "final"

    def __post_init__(self):
        self.geometry = GraspGeometry.from_circle(self.circle)
        self.weight = np.concatenate([np.full(k, float(w)) for k, w in zip((5, 3, 3), self.block_weights)])

    def residuals(self, xs, times):
        xs = np.asarray(xs, dtype=float)
        n = self.model.dof
        values, jacs = grasp_terms(self.model, xs[..., :n], self.geometry)
        r = np.concatenate([values[b] for b in GRASP_BLOCKS], axis=-1)
        jq = np.concatenate([jacs[b] for b in GRASP_BLOCKS], axis=-2)
        jac = np.zeros(r.shape + (xs.shape[-1],))
        jac[..., :n] = jq
        return r, jac
