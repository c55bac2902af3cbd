"""Manipulator dynamics written with multivector matrices.

The generalized mass matrix splits into a rotational part ``I(q)`` built from
link-frame rotation generators and a translational part ``V^T m V`` built
from the lever-arm matrix ``V_jk = X_j . B'_k`` (``X_j`` the centre of mass of
link ``j``, ``B'_k`` the current rotation bivector of joint ``k``).

Every multivector-to-real reduction goes through :func:`contract`, which
evaluates ``sum_j w_j <reverse(A_jk) B_jl>_0``.  For the vectors in ``V`` this
is the Euclidean dot product of centre-of-mass velocities; for rotation
bivectors it is the dot product of their (e23, e13, e12) coordinates.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .algebra import EUCLIDEAN, GRADES, I3, ROTATION, ROTOR, Multivector, embed_point, sandwich, scalar_product_table
from .errors import NumericalError
from .kinematics import _q, chain_motors, rotation_bivectors, rotation_bivectors_dt
from .model import RobotModel

COND_LIMIT = 1e12

# (e23, e13, e12) coordinates <-> rotation axis: B = I3 w
_AXIS_SIGN = np.array([1.0, -1.0, 1.0])


def contract(a: Multivector, b: Multivector, weights=None) -> np.ndarray:
    """(A^T diag(w) B)_kl = sum_j w_j <reverse(A_jk) B_jl>_0 for (J, K) and (J, L) matrices.

    One-dimensional ``b`` is treated as a column, giving a length-K vector.
    """
    g = scalar_product_table(a.blades, b.blades)
    w = np.ones(a.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if len(b.shape) == 1:
        return np.einsum("jka,ab,jb,j->k", a.coeffs, g, b.coeffs, w)
    return np.einsum("jka,ab,jlb,j->kl", a.coeffs, g, b.coeffs, w)


def apply_inertia(tensor: np.ndarray, b: Multivector) -> Multivector:
    """Inertia tensor acting on rotation bivectors (or on vectors), grade preserving.

    ``tensor`` has shape (..., 3, 3) and broadcasts against the batch of ``b``.
    """
    if all(GRADES[i] == 1 for i in b.blades):
        b = b.cast(EUCLIDEAN)
        return Multivector(EUCLIDEAN, np.einsum("...ab,...b->...a", tensor, b.coeffs))
    c = b.cast(ROTATION).coeffs * _AXIS_SIGN
    return Multivector(ROTATION, np.einsum("...ab,...b->...a", tensor, c) * _AXIS_SIGN)


class DynamicsState:
    """Lazily evaluated dynamic quantities at one joint state ``(q, qd)``.

    Intermediate multivector matrices are cached per instance; build a new
    instance for every state.
    """

    def __init__(self, model: RobotModel, q, qd=None):
        self.model = model
        self.q = _q(model, q)
        self.qd = np.zeros(model.dof) if qd is None else _q(model, qd)
        if self.q.ndim != 1:
            raise ValueError("DynamicsState works on a single joint state")
        n = model.dof
        self.n = n
        self._lower = np.tril(np.ones((n, n)))

    # -- kinematic building blocks ---------------------------------------------

    @cached_property
    def prefix(self) -> Multivector:
        return chain_motors(self.model, self.q)

    @cached_property
    def rotors(self) -> Multivector:
        """World orientation R_i of each link frame (rotor part of M^i)."""
        return self.prefix.cast(ROTOR)

    @cached_property
    def bprime(self) -> Multivector:
        return rotation_bivectors(self.model, self.q, self.prefix)

    @cached_property
    def bprime_dt(self) -> Multivector:
        return rotation_bivectors_dt(self.model, self.q, self.qd, self.bprime)

    @cached_property
    def com_points(self) -> Multivector:
        return sandwich(self.prefix, embed_point(self.model.coms))

    def _masked(self, x: Multivector) -> Multivector:
        return Multivector(x.blades, x.coeffs * self._lower[..., None])

    # -- lever arms ----------------------------------------------------------------

    @cached_property
    def v(self) -> Multivector:
        """V_jk = X_j . B'_k for k <= j, zero above the diagonal."""
        return self._masked(self.com_points.expand(-1) | self.bprime.expand(-2))

    @cached_property
    def com_velocities(self) -> Multivector:
        """(V qd)_j, the velocity of each centre of mass."""
        return Multivector(self.v.blades, np.einsum("jka,k->ja", self.v.coeffs, self.qd))

    @cached_property
    def v_dt(self) -> Multivector:
        """dV_jk/dt = (V qd)_j . B'_k + X_j . dB'_k/dt, masked like V."""
        a = self.com_velocities.expand(-1) | self.bprime.expand(-2)
        b = self.com_points.expand(-1) | self.bprime_dt.expand(-2)
        return self._masked(a + b)

    # -- rotational terms ----------------------------------------------------

    def _to_body(self, world: Multivector) -> Multivector:
        """~R_i rot(W_ij) R_i for a (N, N) matrix of world bivectors, row i = link i."""
        rot = world.cast(ROTATION)
        r = self.rotors.expand(-1)
        return sandwich(r.reverse(), rot)

    @cached_property
    def body_generators(self) -> Multivector:
        """B_{i,j}: rotation generator of joint j seen in the frame of link i (j <= i)."""
        world = Multivector(self.bprime.blades, np.broadcast_to(self.bprime.coeffs, (self.n,) + self.bprime.coeffs.shape))
        return self._masked(self._to_body(world))

    @cached_property
    def body_generators_dt(self) -> Multivector:
        """dB_{i,j} = ~R_i rot(dB'_j) R_i, j <= i."""
        bd = self.bprime_dt
        world = Multivector(bd.blades, np.broadcast_to(bd.coeffs, (self.n,) + bd.coeffs.shape))
        return self._masked(self._to_body(world))

    @cached_property
    def link_twists(self) -> Multivector:
        """B^w_i = J^G_i qd, the world bivector velocity of link i."""
        c = np.einsum("ij,j,ja->ia", self._lower, self.qd, self.bprime.coeffs)
        return Multivector(self.bprime.blades, c)

    @cached_property
    def inertia(self) -> np.ndarray:
        """I(q) = sum_i B_i^T Inertia_i(B_i)."""
        bb = self.body_generators
        ib = apply_inertia(self.model.inertias[:, None], bb)
        return contract(bb, ib)

    @cached_property
    def gyroscopic_bivectors(self) -> Multivector:
        """~R_i Bhat^w_i R_i with Bhat^w = (I3 B^w) ^ (R Inertia(~R I3 B^w R) ~R)."""
        a = (I3 * self.link_twists.cast(ROTATION)).cast(EUCLIDEAN)
        r = self.rotors
        body = sandwich(r.reverse(), a)
        world_moment = sandwich(r, apply_inertia(self.model.inertias, body))
        bhat = (a ^ world_moment).cast(ROTATION)
        return sandwich(r.reverse(), bhat)

    @cached_property
    def inertia_velocity_term(self) -> np.ndarray:
        """sum_i B_i^T (Inertia_i(dB_i qd) + ~R_i Bhat^w_i R_i), the rotational velocity-product force."""
        bd = self.body_generators_dt
        acc = Multivector(bd.blades, np.einsum("ija,j->ia", bd.coeffs, self.qd))
        term = apply_inertia(self.model.inertias, acc) + self.gyroscopic_bivectors
        return contract(self.body_generators, term.cast(ROTATION))

    @cached_property
    def inertia_dt(self) -> np.ndarray:
        """Total time derivative of I(q) along qd."""
        bb = self.body_generators
        # d/dt (~R b R) = ~R (db + B^w x b) R
        world = self.bprime.cast(ROTATION)
        twist = self.link_twists.cast(ROTATION)
        spin = twist.expand(-1).commutator(world.expand(-2)).cast(ROTATION)
        world_dt = Multivector(ROTATION, spin.coeffs + self.bprime_dt.cast(ROTATION).coeffs[None])
        bd = self._masked(self._to_body(world_dt))
        ib = apply_inertia(self.model.inertias[:, None], bb)
        ibd = apply_inertia(self.model.inertias[:, None], bd)
        return contract(bd, ib) + contract(bb, ibd)

    # -- assembled quantities --------------------------------------------------

    @cached_property
    def gravity_field(self) -> Multivector:
        return Multivector(EUCLIDEAN, np.tile([0.0, 0.0, self.model.gravity], (self.n, 1)))

    @cached_property
    def mass_matrix(self) -> np.ndarray:
        """I(q) + V^T m V."""
        m = self.inertia + contract(self.v, self.v, self.model.masses)
        return 0.5 * (m + m.T)

    @cached_property
    def gravity(self) -> np.ndarray:
        """V^T m G."""
        return contract(self.v, self.gravity_field, self.model.masses)

    @cached_property
    def velocity_product(self) -> np.ndarray:
        """Coriolis and centrifugal force vector: Idot-term + V^T m dV qd."""
        vd_qd = Multivector(self.v_dt.blades, np.einsum("jka,k->ja", self.v_dt.coeffs, self.qd))
        return self.inertia_velocity_term + contract(self.v, vd_qd, self.model.masses)

    def inverse_dynamics(self, qdd, tau_ext=None) -> np.ndarray:
        qdd = _q(self.model, qdd)
        ext = 0.0 if tau_ext is None else np.asarray(tau_ext, dtype=float)
        v_qdd = Multivector(self.v.blades, np.einsum("jka,k->ja", self.v.coeffs, qdd))
        translational = contract(self.v, v_qdd, self.model.masses)
        return ext + self.inertia @ qdd + translational + self.velocity_product + self.gravity

    def forward_dynamics(self, tau, tau_ext=None) -> np.ndarray:
        ext = 0.0 if tau_ext is None else np.asarray(tau_ext, dtype=float)
        rhs = np.asarray(tau, dtype=float) - ext - self.velocity_product - self.gravity
        return solve_spd(self.mass_matrix, rhs)

    def kinetic_energy(self) -> float:
        return 0.5 * float(self.qd @ self.mass_matrix @ self.qd)

    def potential_energy(self) -> float:
        z = self.com_points.coeff("e3")
        return float(self.model.gravity * np.dot(self.model.masses, z))


def solve_spd(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system via Cholesky with a conditioning guard."""
    eig = np.linalg.eigvalsh(m)
    if eig[0] <= 0.0 or eig[-1] / eig[0] > COND_LIMIT:
        raise NumericalError(f"mass matrix is singular or ill-conditioned (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g})")
    low = np.linalg.cholesky(m)
    return np.linalg.solve(low.T, np.linalg.solve(low, rhs))


# -- functional interface -------------------------------------------------------


def v_matrix(model: RobotModel, q) -> Multivector:
    return DynamicsState(model, q).v


def v_matrix_dt(model: RobotModel, q, qd) -> Multivector:
    return DynamicsState(model, q, qd).v_dt


def inertia_matrix(model: RobotModel, q) -> np.ndarray:
    return DynamicsState(model, q).inertia


def inertia_matrix_dt(model: RobotModel, q, qd) -> np.ndarray:
    return DynamicsState(model, q, qd).inertia_dt


def mass_matrix(model: RobotModel, q) -> np.ndarray:
    return DynamicsState(model, q).mass_matrix


def gravity_forces(model: RobotModel, q) -> np.ndarray:
    return DynamicsState(model, q).gravity


def coriolis_forces(model: RobotModel, q, qd) -> np.ndarray:
    return DynamicsState(model, q, qd).velocity_product


def inverse_dynamics(model: RobotModel, q, qd, qdd, tau_ext=None) -> np.ndarray:
    return DynamicsState(model, q, qd).inverse_dynamics(qdd, tau_ext)


def forward_dynamics(model: RobotModel, q, qd, tau, tau_ext=None) -> np.ndarray:
    return DynamicsState(model, q, qd).forward_dynamics(tau, tau_ext)
