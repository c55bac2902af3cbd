"""Rotors, translators and motors, with the exp/log maps onto screw bivectors.

A motor ``M = T R`` is stored on the eight blades
``1, e23, e13, e12, e1i, e2i, e3i, e123i`` (coordinates ``m1..m8``).  Its
logarithm is a screw bivector on ``e23, e13, e12, e1i, e2i, e3i``
(coordinates ``b1..b6``) where ``b1..b3`` is the rotation angle times the unit
rotation plane and ``b4..b6`` is the translation vector ``t`` of the split
``M = T R``.  :func:`exp_bivector` is the exact inverse of that map.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .algebra import (
    EI,
    E0,
    MOTOR,
    ROTATION,
    ROTOR,
    SCREW,
    TRANSLATOR,
    Multivector,
    sandwich,
)
from .errors import DomainError

# |m1| above this uses the Taylor expansion of 2 acos(m) / sin(acos(m)) about m = 1
SERIES_THRESHOLD = 1.0 - 1e-8
# below this distance from 1 the closed-form derivative cancels badly; a long series is used instead
DERIVATIVE_SERIES_BAND = 1e-3
# Taylor coefficients of 2 acos(1 - x) / sin(acos(1 - x)) in x: a0 = 2, a(k+1) = a(k) (k+1) / (2k+3)
_RATIO_COEFFS = np.cumprod([2.0] + [(k + 1) / (2 * k + 3) for k in range(13)])


def identity_motor(shape: tuple = ()) -> Multivector:
    c = np.zeros(tuple(shape) + (len(MOTOR),))
    c[..., 0] = 1.0
    return Multivector(MOTOR, c)


def as_motor(m: Multivector) -> Multivector:
    return m.cast(MOTOR)


def make_translator(t) -> Multivector:
    """T = 1 - t ei / 2, so that T e0 ~T is the point at ``t``."""
    t = np.asarray(t, dtype=float)
    c = np.concatenate([np.ones(t.shape[:-1] + (1,)), -0.5 * t], axis=-1)
    return Multivector(TRANSLATOR, c)


def make_rotor(plane, angle) -> Multivector:
    """R = cos(angle/2) - sin(angle/2) plane for a unit plane in span{e23, e13, e12}.

    With ``plane = e12`` a positive angle turns e1 towards e2.
    """
    if isinstance(plane, Multivector):
        if plane.residual_outside(ROTATION).max(initial=0.0) > 0.0:
            raise DomainError("rotation plane must lie in span{e23, e13, e12}")
        plane = plane.cast(ROTATION).coeffs
    plane = np.asarray(plane, dtype=float)
    if np.any(np.abs(np.linalg.norm(plane, axis=-1) - 1.0) > 1e-9):
        raise DomainError("rotation plane must be a unit bivector")
    angle = np.asarray(angle, dtype=float)
    half = 0.5 * angle[..., None]
    c = np.concatenate([np.cos(half), -np.sin(half) * plane], axis=-1)
    return Multivector(ROTOR, c)


def rotor_from_rotation_vector(w) -> Multivector:
    """Rotor for angle ``|w|`` in the unit plane ``w / |w|`` (identity at w = 0)."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1, keepdims=True)
    half = 0.5 * theta
    # sin(theta/2)/theta with its limit 1/2 at the origin
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    s = np.where(small, 0.5 - theta**2 / 48.0, np.sin(half) / safe)
    return Multivector(ROTOR, np.concatenate([np.cos(half), -s * w], axis=-1))


def split_motor(m: Multivector):
    """Return (T, R) with M = T R; R is read as -e0 . (M ei) and T = M ~R."""
    m = as_motor(m)
    r = -(E0 | (m * EI))
    r = r.cast(ROTOR)
    t = (m * r.reverse()).cast(TRANSLATOR)
    return t, r


def motor_translation(m: Multivector) -> np.ndarray:
    """Translation vector t of the split M = T R."""
    return log_motor(m).coeffs[..., 3:]


def _angle(m1: np.ndarray):
    """(acos(m), sin(acos(m))) evaluated stably near m = 1, where 1 - m is exact."""
    x = 1.0 - m1
    phi = np.where(m1 < 0.0, np.arccos(np.clip(m1, -1.0, 1.0)), 2.0 * np.arcsin(np.sqrt(np.clip(0.5 * x, 0.0, 1.0))))
    return phi, np.sqrt(np.clip(x * (1.0 + m1), 0.0, None))


def _acos_ratio(m1: np.ndarray) -> np.ndarray:
    """2 acos(m) / sin(acos(m)) with a series branch near m = 1."""
    m1 = np.asarray(m1, dtype=float)
    near = m1 > SERIES_THRESHOLD
    x = 1.0 - m1
    series = 2.0 + 2.0 * x / 3.0 + 4.0 * x**2 / 15.0 + 4.0 * x**3 / 35.0 + 16.0 * x**4 / 315.0
    phi, sin = _angle(np.where(near, 0.0, m1))
    return np.where(near, series, 2.0 * phi / sin)


def _acos_ratio_derivative(m1: np.ndarray) -> np.ndarray:
    """d/dm of 2 acos(m) / sin(acos(m)) = 2 (m acos(m) / sin(acos(m)) - 1) / (1 - m^2)."""
    m1 = np.asarray(m1, dtype=float)
    near = m1 > SERIES_THRESHOLD
    x = 1.0 - m1
    series = -(2.0 / 3.0 + 8.0 * x / 15.0 + 12.0 * x**2 / 35.0 + 64.0 * x**3 / 315.0)
    band = ~near & (x < DERIVATIVE_SERIES_BAND)
    k = np.arange(1, len(_RATIO_COEFFS))
    long_series = -np.polynomial.polynomial.polyval(x, k * _RATIO_COEFFS[1:])
    mc = np.where(near | band, 0.0, m1)
    phi, sin = _angle(mc)
    direct = 2.0 * (mc * phi / sin - 1.0) / (sin * sin)
    return np.where(near, series, np.where(band, long_series, direct))


def _check_branch(m1: np.ndarray):
    if np.any(np.asarray(m1) <= -1.0 + 1e-12):
        raise DomainError("motor logarithm undefined for a full turn (m1 = -1)")


def log_motor(m: Multivector) -> Multivector:
    """Screw bivector ``b1..b6`` of a motor (rotation vector and translation)."""
    c = as_motor(m).coeffs
    m1, m2, m3, m4, m5, m6, m7, m8 = np.moveaxis(c, -1, 0)
    _check_branch(m1)
    f = _acos_ratio(np.minimum(m1, 1.0 + 1e-12))
    b = np.stack(
        [
            -m2 * f,
            -m3 * f,
            -m4 * f,
            -2.0 * (m1 * m5 + m4 * m6 + m3 * m7 + m2 * m8),
            -2.0 * (-m4 * m5 + m1 * m6 + m2 * m7 - m3 * m8),
            -2.0 * (-m3 * m5 - m2 * m6 + m1 * m7 + m4 * m8),
        ],
        axis=-1,
    )
    return Multivector(SCREW, b)


def exp_bivector(b) -> Multivector:
    """Motor whose logarithm is the screw bivector ``b`` (array (..., 6) or Multivector)."""
    if isinstance(b, Multivector):
        b = b.cast(SCREW).coeffs
    b = np.asarray(b, dtype=float)
    r = rotor_from_rotation_vector(b[..., :3])
    t = make_translator(b[..., 3:])
    return (t * r).cast(MOTOR)


def log_jacobian(m: Multivector) -> np.ndarray:
    """Jacobian d(b1..b6)/d(m1..m8) of :func:`log_motor`, shape (..., 6, 8)."""
    c = as_motor(m).coeffs
    m1, m2, m3, m4, m5, m6, m7, m8 = np.moveaxis(c, -1, 0)
    _check_branch(m1)
    m1c = np.minimum(m1, 1.0 + 1e-12)
    f = _acos_ratio(m1c)
    df = _acos_ratio_derivative(m1c)
    J = np.zeros(c.shape[:-1] + (6, 8))
    J[..., 0, 0] = -m2 * df
    J[..., 1, 0] = -m3 * df
    J[..., 2, 0] = -m4 * df
    J[..., 0, 1] = -f
    J[..., 1, 2] = -f
    J[..., 2, 3] = -f
    # b4 = -2( m1 m5 + m4 m6 + m3 m7 + m2 m8)
    J[..., 3, :] = -2.0 * np.stack([m5, m8, m7, m6, m1, m4, m3, m2], axis=-1)
    # b5 = -2(-m4 m5 + m1 m6 + m2 m7 - m3 m8)
    J[..., 4, :] = -2.0 * np.stack([m6, m7, -m8, -m5, -m4, m1, m2, -m3], axis=-1)
    # b6 = -2(-m3 m5 - m2 m6 + m1 m7 + m4 m8)
    J[..., 5, :] = -2.0 * np.stack([m7, -m6, -m5, m8, -m3, -m2, m1, m4], axis=-1)
    return J


def exp_jacobian(b) -> np.ndarray:
    """Jacobian d(m1..m8)/d(b1..b6) of :func:`exp_bivector`, shape (..., 8, 6)."""
    if isinstance(b, Multivector):
        b = b.cast(SCREW).coeffs
    b = np.asarray(b, dtype=float)
    w = b[..., :3]
    t = b[..., 3:]
    theta = np.linalg.norm(w, axis=-1)
    small = theta < 1e-6
    th = np.where(small, 1.0, theta)
    half = 0.5 * theta
    # R = c - s w with c = cos(theta/2), s = sin(theta/2)/theta
    s = np.where(small, 0.5 - theta**2 / 48.0, np.sin(half) / th)
    # ds/dtheta / theta, well defined at 0 (limit -1/24)
    ds_over = np.where(small, -1.0 / 24.0 + theta**2 / 960.0, (0.5 * np.cos(half) * th - np.sin(half)) / th**3)
    r_coeffs = np.concatenate([np.cos(half)[..., None], -s[..., None] * w], axis=-1)
    # dR/dw, shape (..., 4, 3)
    dR = np.zeros(b.shape[:-1] + (4, 3))
    dR[..., 0, :] = -0.5 * s[..., None] * w
    dR[..., 1:, :] = -s[..., None, None] * np.eye(3) - ds_over[..., None, None] * w[..., :, None] * w[..., None, :]
    # M = T R is bilinear in (T, R); assemble it via the product kernel on basis elements
    T = make_translator(t)
    R = Multivector(ROTOR, r_coeffs)
    J = np.zeros(b.shape[:-1] + (8, 6))
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        dM = (T * Multivector(ROTOR, e)).cast(MOTOR).coeffs  # (..., 8)
        J[..., :, :3] += dM[..., :, None] * dR[..., k, None, :]
    for k in range(3):
        e = np.zeros(4)
        e[k + 1] = -0.5
        dM = (Multivector(TRANSLATOR, e) * R).cast(MOTOR).coeffs
        J[..., :, 3 + k] = dM
    return J


def motor_constraint_residual(m: Multivector) -> np.ndarray:
    """max |M ~M - 1| over all blades."""
    p = (m * m.reverse()).dense()
    p[..., 0] -= 1.0
    return np.abs(p).max(axis=-1)


def normalize_motor(m: Multivector) -> Multivector:
    """Project a drifted motor back onto M ~M = 1 (rotor normalised, translation kept)."""
    m = as_motor(m)
    r = m.cast(ROTOR)
    s = np.sum(r.coeffs**2, axis=-1)
    if np.any(s <= 0.0):
        raise DomainError("cannot normalise a motor with vanishing rotor part")
    r = r / np.sqrt(s)
    t = (m * r.reverse()).cast(TRANSLATOR)
    t = Multivector(TRANSLATOR, t.coeffs / t.coeffs[..., :1])
    return (t * r).cast(MOTOR)


def motor_interpolate(viapoints: Sequence[Multivector], weights) -> Multivector:
    """M(s) = exp(sum_j w_j(s) log M_j) for each row of ``weights`` (S x J)."""
    if len(viapoints) == 0:
        raise DomainError("at least one viapoint is required")
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if w.shape[-1] != len(viapoints):
        raise DomainError(f"weights have {w.shape[-1]} columns for {len(viapoints)} viapoints")
    if np.any(np.abs(w.sum(axis=-1) - 1.0) > 1e-9):
        raise DomainError("interpolation weights must sum to 1")
    logs = np.stack([log_motor(v).coeffs for v in viapoints], axis=0)  # (J, 6)
    return exp_bivector(w @ logs)


def transform(m: Multivector, x: Multivector) -> Multivector:
    return sandwich(as_motor(m), x)
