import numpy as np
import pytest
from numpy.testing import assert_allclose

from garo.algebra import MOTOR, Multivector, embed_point, extract_point
from garo.errors import DomainError
from garo.kinematics import (
    analytic_jacobian,
    chain_motors,
    end_effector_point,
    forward_kinematics,
    forward_kinematics_to,
    geometric_jacobian,
    geometric_jacobian_dt,
    rotation_bivectors,
    rotation_bivectors_dt,
)
from garo.motors import motor_constraint_residual, transform

from oracles import FRANKA_DH, FRANKA_FLANGE, modified_dh_chain


def test_fk_matches_dh_oracle(franka, rng):
    q = franka.sample_configurations(rng, 200)
    m = forward_kinematics(franka, q)
    p = rng.normal(size=3)
    got = extract_point(transform(m, embed_point(p)))
    for k in range(len(q)):
        t = modified_dh_chain(FRANKA_DH, q[k], FRANKA_FLANGE)
        assert_allclose(got[k], t[:3, :3] @ p + t[:3, 3], atol=1e-12)


def test_fk_planar_closed_form(planar2, rng):
    q = rng.uniform(-np.pi, np.pi, size=(50, 2))
    x = np.cos(q[:, 0]) + 0.8 * np.cos(q.sum(1))
    z = np.sin(q[:, 0]) + 0.8 * np.sin(q.sum(1))
    assert_allclose(end_effector_point(planar2, q), np.stack([x, np.zeros(50), z], 1), atol=1e-12)


def test_fk_is_unit_motor_and_batched(franka, rng):
    q = franka.sample_configurations(rng, 12).reshape(3, 4, 7)
    m = forward_kinematics(franka, q)
    assert m.shape == (3, 4)
    assert motor_constraint_residual(m).max() < 1e-12
    assert m[1, 2].allclose(forward_kinematics(franka, q[1, 2]))


def test_partial_chains(franka, rng):
    q = franka.sample_configurations(rng, 1)[0]
    prefix = chain_motors(franka, q)
    for k in range(1, 8):
        assert forward_kinematics_to(franka, q, k).allclose(prefix[k - 1], atol=1e-14)
    assert (prefix[6] * franka.tool).cast(MOTOR).allclose(forward_kinematics(franka, q))
    with pytest.raises(DomainError):
        forward_kinematics_to(franka, q, 0)
    with pytest.raises(DomainError):
        forward_kinematics(franka, q[:6])


def test_jacobian_identity(franka, rng):
    q = franka.sample_configurations(rng, 1000)
    ja = analytic_jacobian(franka, q)
    jg = geometric_jacobian(franka, q)
    m = forward_kinematics(franka, q)
    resid = jg + 2.0 * ja * m.reverse().expand(-1)
    assert np.abs(resid.dense()).max() < 1e-10


def test_analytic_jacobian_matches_finite_differences(franka, rng):
    h = 1e-6
    for q in franka.sample_configurations(rng, 10):
        ja = analytic_jacobian(franka, q).coeffs
        for i in range(7):
            dq = np.zeros(7)
            dq[i] = h
            fd = (forward_kinematics(franka, q + dq).coeffs - forward_kinematics(franka, q - dq).coeffs) / (2 * h)
            assert_allclose(ja[i], fd, atol=1e-8)


def test_geometric_jacobian_moves_points(franka, rng):
    # M' = -1/2 (sum_i B'_i qd_i) M, so a carried element Y = M X ~M moves as Y x Omega
    h = 1e-6
    x = embed_point(rng.normal(size=3))
    for q in franka.sample_configurations(rng, 5):
        qd = rng.normal(size=7)
        b = rotation_bivectors(franka, q)
        omega = Multivector(b.blades, qd @ b.coeffs)
        y = transform(forward_kinematics(franka, q), x)
        fd = (transform(forward_kinematics(franka, q + h * qd), x) - transform(forward_kinematics(franka, q - h * qd), x)) / (2 * h)
        assert y.commutator(omega).allclose(fd, atol=1e-7)


def test_truncated_geometric_jacobian(franka, rng):
    q = franka.sample_configurations(rng, 1)[0]
    j3 = geometric_jacobian(franka, q, 3).coeffs
    assert np.all(j3[3:] == 0)
    assert_allclose(j3[:3], geometric_jacobian(franka, q).coeffs[:3])
    with pytest.raises(DomainError):
        geometric_jacobian(franka, q, 8)


def test_jacobian_time_derivative(franka, rng):
    h = 1e-6
    for q in franka.sample_configurations(rng, 5):
        qd = rng.normal(size=7)
        fd = (rotation_bivectors(franka, q + h * qd).coeffs - rotation_bivectors(franka, q - h * qd).coeffs) / (2 * h)
        assert_allclose(rotation_bivectors_dt(franka, q, qd).coeffs, fd, atol=1e-7)
        jd = geometric_jacobian_dt(franka, q, qd).coeffs
        for i in range(7):
            assert_allclose(jd[i, : i + 1], fd[: i + 1], atol=1e-7)
            assert np.all(jd[i, i + 1 :] == 0)
