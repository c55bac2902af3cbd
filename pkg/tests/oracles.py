"""Independent reference implementations used by the tests.

None of these import the code under test except for reading blade names.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

# -- diagonal-basis algebra ----------------------------------------------------
#
# Orthogonal basis e1, e2, e3, ep, em with ep^2 = +1 and em^2 = -1 (bits 0..4).
# The null vectors are e0 = (em - ep)/2 and ei = em + ep.

_SQUARES = (1, 1, 1, 1, -1)


def _reorder_sign(a: int, b: int) -> int:
    swaps = 0
    a >>= 1
    while a:
        swaps += bin(a & b).count("1")
        a >>= 1
    return -1 if swaps & 1 else 1


def _blade_gp(a: int, b: int):
    sign = _reorder_sign(a, b)
    common = a & b
    for bit in range(5):
        if common >> bit & 1:
            sign *= _SQUARES[bit]
    return a ^ b, sign


def dgp(x: dict, y: dict) -> dict:
    """Geometric product of dense {mask: Fraction} multivectors in the diagonal basis."""
    out: dict = {}
    for ma, ca in x.items():
        for mb, cb in y.items():
            m, s = _blade_gp(ma, mb)
            out[m] = out.get(m, 0) + s * ca * cb
    return {m: c for m, c in out.items() if c != 0}


def _add(x: dict, y: dict, s=1) -> dict:
    out = dict(x)
    for m, c in y.items():
        out[m] = out.get(m, 0) + s * c
    return {m: c for m, c in out.items() if c != 0}


def _grade_of(x: dict) -> int:
    grades = {bin(m).count("1") for m in x}
    assert len(grades) <= 1
    return grades.pop() if grades else 0


def dwedge(v: dict, blade: dict, k: int) -> dict:
    """v ^ B = (v B + (-1)^k B v) / 2 for a vector v and a k-blade B."""
    s = 1 if k % 2 == 0 else -1
    both = _add(dgp(v, blade), dgp(blade, v), s)
    return {m: c / 2 for m, c in both.items()}


HALF = Fraction(1, 2)
VECTORS = {
    "1": {0b00001: Fraction(1)},
    "2": {0b00010: Fraction(1)},
    "3": {0b00100: Fraction(1)},
    "0": {0b10000: HALF, 0b01000: -HALF},
    "i": {0b10000: Fraction(1), 0b01000: Fraction(1)},
}
WEDGE_ORDER = "0123i"


def conformal_blade(name: str) -> dict:
    """Dense diagonal-basis expansion of a blade named like 'e01i', wedged in e0<e1<e2<e3<ei order."""
    if name == "1":
        return {0: Fraction(1)}
    letters = sorted(name[1:], key=WEDGE_ORDER.index)
    out = {0: Fraction(1)}
    for k, ch in enumerate(reversed(letters)):
        out = dwedge(VECTORS[ch], out, k)
    return out


def _solve_fraction(a, b):
    """Solve a x = b exactly (Gauss-Jordan over Fractions); a is n x n, b is n x m."""
    n = len(a)
    m = [list(row) + list(rhs) for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [row[n:] for row in m]


@lru_cache(maxsize=None)
def oracle_table(names: tuple):
    """32x32 table: product of blades i and j as a {blade index: Fraction} dict."""
    dense = [conformal_blade(nm) for nm in names]
    masks = list(range(32))
    # change of basis: column k holds blade k's diagonal coefficients
    basis = [[dense[k].get(mask, Fraction(0)) for k in range(32)] for mask in masks]
    inv = _solve_fraction(basis, [[Fraction(int(r == c)) for c in range(32)] for r in range(32)])
    table = []
    for i in range(32):
        row = []
        for j in range(32):
            prod = dgp(dense[i], dense[j])
            coeffs = {}
            for k in range(32):
                c = sum((inv[k][mask] * v for mask, v in prod.items()), Fraction(0))
                if c != 0:
                    coeffs[k] = c
            row.append(coeffs)
        table.append(row)
    return table


# -- closed-form planar arms ---------------------------------------------------


def planar_one_link(q, qd, qdd, m, c, izz, g):
    """Torque of a single link rotating in a vertical plane, angle measured from horizontal."""
    return (izz + m * c * c) * qdd + g * m * c * np.cos(q)


def planar_two_link(q, qd, qdd, m1, m2, l1, c1, c2, i1, i2, g):
    """Textbook two-link planar arm in a vertical plane (angles from horizontal, relative elbow)."""
    q1, q2 = q
    cos2, sin2 = np.cos(q2), np.sin(q2)
    m11 = i1 + i2 + m1 * c1**2 + m2 * (l1**2 + c2**2 + 2 * l1 * c2 * cos2)
    m12 = i2 + m2 * (c2**2 + l1 * c2 * cos2)
    m22 = i2 + m2 * c2**2
    h = m2 * l1 * c2 * sin2
    cor = np.array([-h * (2 * qd[0] * qd[1] + qd[1] ** 2), h * qd[0] ** 2])
    grav = g * np.array([(m1 * c1 + m2 * l1) * np.cos(q1) + m2 * c2 * np.cos(q1 + q2), m2 * c2 * np.cos(q1 + q2)])
    mass = np.array([[m11, m12], [m12, m22]])
    return mass @ np.asarray(qdd) + cor + grav


# -- homogeneous-matrix forward kinematics --------------------------------------


def _rot(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * k @ k


def homogeneous(rotation, translation):
    t = np.eye(4)
    t[:3, :3] = rotation
    t[:3, 3] = translation
    return t


def modified_dh_chain(rows, q, tool=None):
    """Product of Rx(alpha) Tx(a) Tz(d) Rz(q) over modified-DH rows (a, d, alpha)."""
    t = np.eye(4)
    for (a, d, alpha), qi in zip(rows, q):
        t = t @ homogeneous(_rot([1, 0, 0], alpha), [0, 0, 0])
        t = t @ homogeneous(np.eye(3), [a, 0, 0])
        t = t @ homogeneous(np.eye(3), [0, 0, d])
        t = t @ homogeneous(_rot([0, 0, 1], qi), [0, 0, 0])
    if tool is not None:
        t = t @ tool
    return t


FRANKA_DH = [
    (0.0, 0.333, 0.0),
    (0.0, 0.0, -np.pi / 2),
    (0.0, 0.316, np.pi / 2),
    (0.0825, 0.0, np.pi / 2),
    (-0.0825, 0.384, -np.pi / 2),
    (0.0, 0.0, np.pi / 2),
    (0.088, 0.0, np.pi / 2),
]
FRANKA_FLANGE = homogeneous(np.eye(3), [0, 0, 0.107])


# -- finite-horizon LQR --------------------------------------------------------


def riccati_tracking(a, b, q_list, refs, r, x0):
    """Finite-horizon LQ tracking: min sum_t (x_t - r_t)^T Q_t (x_t - r_t) + u^T R u.

    ``q_list[t]`` and ``refs[t]`` are given for t = 0..T (t = 0 is ignored).
    Returns the optimal state trajectory via the standard P/p recursion.
    """
    horizon = len(q_list) - 1
    p_mat = q_list[horizon]
    p_vec = -q_list[horizon] @ refs[horizon]
    gains = []
    for t in range(horizon - 1, -1, -1):
        s = r + b.T @ p_mat @ b
        k_fb = np.linalg.solve(s, b.T @ p_mat @ a)
        k_ff = np.linalg.solve(s, b.T @ p_vec)
        gains.append((k_fb, k_ff))
        acl = a - b @ k_fb
        q_t = q_list[t] if t > 0 else np.zeros_like(q_list[0])
        ref_t = refs[t] if t > 0 else np.zeros_like(refs[0])
        p_vec_new = acl.T @ p_vec - q_t @ ref_t
        p_mat = q_t + a.T @ p_mat @ acl
        p_vec = p_vec_new
    gains.reverse()
    xs = [np.asarray(x0, dtype=float)]
    for k_fb, k_ff in gains:
        u = -k_fb @ xs[-1] - k_ff
        xs.append(a @ xs[-1] + b @ u)
    return np.array(xs)
