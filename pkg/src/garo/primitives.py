"""Geometric primitives in outer-product (OPNS) form and their relations.

Primitives are plain :class:`~garo.algebra.Multivector` values built from
conformal points with the outer product.  They are kept homogeneous (never
normalised), so every predicate here is scale invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    EI,
    E0,
    EUCLIDEAN,
    Multivector,
    dual,
    embed_point,
    extract_point,
)
from .errors import ConfigError, DegeneracyError, DomainError

DEGENERACY_RTOL = 1e-12


def as_point(p) -> Multivector:
    """Accept either a conformal point or Euclidean coordinates."""
    if isinstance(p, Multivector):
        return p
    return embed_point(p)


def _wedge_all(points) -> Multivector:
    out = points[0]
    for p in points[1:]:
        out = out ^ p
    return out


def _check(result: Multivector, points, name: str):
    scale = np.prod([np.maximum(p.norm(), 1.0) for p in points], axis=0)
    if np.any(result.norm() <= DEGENERACY_RTOL * scale):
        raise DegeneracyError(name)


def _check_round(result: Multivector, name: str):
    # a circle or sphere through points on a common line/plane collapses to a flat object
    if np.any((result ^ EI).norm() <= DEGENERACY_RTOL * result.norm()):
        raise DegeneracyError(name, f"degenerate {name}: constructing points lie on a flat")


def make_point_pair(p1, p2) -> Multivector:
    pts = [as_point(p1), as_point(p2)]
    out = _wedge_all(pts)
    _check(out, pts, "point pair")
    return out


def make_line(p1, p2) -> Multivector:
    pts = [as_point(p1), as_point(p2)]
    out = _wedge_all(pts + [EI])
    _check(out, pts, "line")
    return out


def make_circle(p1, p2, p3) -> Multivector:
    pts = [as_point(p1), as_point(p2), as_point(p3)]
    out = _wedge_all(pts)
    _check(out, pts, "circle")
    _check_round(out, "circle")
    return out


def make_plane(p1, p2, p3) -> Multivector:
    pts = [as_point(p1), as_point(p2), as_point(p3)]
    out = _wedge_all(pts + [EI])
    _check(out, pts, "plane")
    return out


def make_sphere(p1, p2, p3, p4) -> Multivector:
    pts = [as_point(p) for p in (p1, p2, p3, p4)]
    out = _wedge_all(pts)
    _check(out, pts, "sphere")
    _check_round(out, "sphere")
    return out


def meet(a: Multivector, b: Multivector) -> Multivector:
    """Incidence of two primitives, (B* ^ A*)*."""
    return dual(dual(b) ^ dual(a))


def incidence(x: Multivector, p) -> Multivector:
    """X ^ P, zero exactly when the point lies on the primitive."""
    return x ^ as_point(p)


@dataclass(frozen=True)
class PointPairSplit:
    first: Multivector
    second: Multivector
    squared_radius: float
    imaginary: bool

    @property
    def points(self) -> np.ndarray:
        return np.stack([extract_point(self.first), extract_point(self.second)])


def point_pair_decompose(pp: Multivector, tangent_tol: float = 1e-10) -> PointPairSplit:
    """Split a point pair into its two points.

    A real pair (``squared_radius > 0``) returns both points, a tangent pair
    the touching point twice, and an imaginary pair (``squared_radius < 0``)
    its real centre twice with ``imaginary=True``.
    """
    pp = pp.grade(2)
    nrm = float(pp.norm())
    if nrm == 0.0:
        raise DomainError("point pair is zero")
    pp = pp / nrm
    d = EI | pp
    d2 = float((d * d).scalar_part())
    if abs(d2) <= DEGENERACY_RTOL:
        raise DomainError("point pair has no finite points (flat point or direction pair)")
    s = float((pp * pp).scalar_part())
    r2 = s / d2
    center = (pp * EI * pp).grade(1)
    c = extract_point(center)
    scale = max(1.0, float(c @ c))
    if abs(r2) <= tangent_tol * scale:
        p = embed_point(c)
        return PointPairSplit(p, p, 0.0, False)
    if s < 0.0:
        p = embed_point(c)
        return PointPairSplit(p, p, r2, True)
    root = np.sqrt(s)
    first = ((pp - root) * d).grade(1)
    second = ((pp + root) * d).grade(1)
    return PointPairSplit(embed_point(extract_point(first)), embed_point(extract_point(second)), r2, False)


def plane_normal(plane: Multivector) -> np.ndarray:
    """Unit normal read from the dual plane E* - (E* . e0) ei / 2."""
    d = dual(plane).grade(1)
    n = d - 0.5 * (d | E0).scalar_part() * EI
    v = n.cast(EUCLIDEAN).coeffs
    length = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(length <= DEGENERACY_RTOL * np.maximum(plane.norm(), 1.0)[..., None]):
        raise DomainError("degenerate plane has no normal")
    return v / length


def project_point_to_plane(p, plane: Multivector) -> Multivector:
    """Orthogonal projection (E . P) E^-1 of a point onto a plane, as a normalised point."""
    p = as_point(p)
    e2 = (plane * plane).scalar_part()
    if np.any(np.abs(e2) <= DEGENERACY_RTOL * np.maximum(plane.norm(), 1.0) ** 2):
        raise DomainError("plane is not invertible")
    inv = plane / e2
    proj = ((plane | p) * inv).grade(1)
    return embed_point(extract_point(proj))


def sphere_center_radius(sphere: Multivector):
    """Centre and signed squared radius of an OPNS sphere."""
    s = dual(sphere).grade(1)
    w = -(s | EI).scalar_part()
    if np.any(np.abs(w) <= DEGENERACY_RTOL * np.maximum(s.norm(), 1.0)):
        raise DomainError("flat sphere (plane) has no centre")
    s = s / w
    c = s.cast(EUCLIDEAN).coeffs
    r2 = (s * s).scalar_part()
    return c, r2


def circle_center(circle: Multivector) -> np.ndarray:
    """Centre of a circle, read from C ei C."""
    return extract_point((circle * EI * circle).grade(1))


def circle_squared_radius(circle: Multivector) -> np.ndarray:
    """Signed squared radius -<C C> / <(ei . C)^2> (negative for imaginary circles)."""
    d = EI | circle
    den = (d * d).scalar_part()
    if np.any(np.abs(den) <= DEGENERACY_RTOL * np.maximum(circle.norm(), 1.0) ** 2):
        raise DomainError("flat circle (line) has no radius")
    return -(circle * circle).scalar_part() / den


# -- textual literals ---------------------------------------------------------

_CONSTRUCTORS = {
    "point": (1, lambda p: p),
    "pointpair": (2, make_point_pair),
    "line": (2, make_line),
    "circle": (3, make_circle),
    "plane": (3, make_plane),
    "sphere": (4, make_sphere),
}

PRIMITIVE_KINDS = tuple(_CONSTRUCTORS)


def _parse_coords(text: str):
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 3 or any(not s for s in parts):
        raise ConfigError(f"expected three comma-separated coordinates, got {text!r}")
    return parts


def split_literal(text: str):
    """``"line:0,0,0;1,0,0"`` -> (``"line"``, [["0","0","0"], ["1","0","0"]])."""
    if ":" not in text:
        raise ConfigError(f"primitive literal {text!r} lacks a 'kind:' prefix")
    kind, body = text.split(":", 1)
    kind = kind.strip().lower()
    if kind not in _CONSTRUCTORS:
        raise ConfigError(f"unknown primitive kind {kind!r}; expected one of {', '.join(PRIMITIVE_KINDS)}")
    groups = [g for g in body.split(";")]
    n, _ = _CONSTRUCTORS[kind]
    if len(groups) != n:
        raise ConfigError(f"{kind} needs {n} point(s), got {len(groups)}")
    return kind, [_parse_coords(g) for g in groups]


def build_primitive(kind: str, points) -> Multivector:
    n, ctor = _CONSTRUCTORS[kind]
    pts = [embed_point(np.asarray(p, dtype=float)) for p in points]
    if kind == "point":
        return pts[0]
    return ctor(*pts)


def parse_primitive(text: str):
    """Parse a literal with numeric coordinates into (kind, Multivector)."""
    kind, groups = split_literal(text)
    try:
        pts = [[float(v) for v in g] for g in groups]
    except ValueError as exc:
        raise ConfigError(f"non-numeric coordinate in {text!r}") from exc
    return kind, build_primitive(kind, pts)
