"""Sparse conformal geometric algebra G(4,1).

Basis vectors are ``e1, e2, e3, ei, e0`` where ``ei`` is the point at
infinity and ``e0`` the origin, with ``ei . e0 = -1`` and ``ei^2 = e0^2 = 0``.
The 32 basis blades are indexed in grade-ascending order; inside a grade the
order follows the usual CGA table (``e23, e13, e12, e1i, ...``).  Every
composite blade is the outer product of its basis vectors taken in the order
``e0 < e1 < e2 < e3 < ei``.

A :class:`Multivector` stores only the coefficients of the blades it declares.
The declared blade set of a product is derived from the operands' blade sets
alone, so the sparsity of a result is known before any number is touched.
Coefficient arrays carry arbitrary leading batch dimensions which broadcast
like numpy arrays; matrices of multivectors are simply multivectors with a
two-dimensional batch shape.
"""

from __future__ import annotations

import functools
from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

BLADE_NAMES = (
    "1",
    "e1", "e2", "e3", "ei", "e0",
    "e23", "e13", "e12", "e1i", "e2i", "e3i", "e01", "e02", "e03", "e0i",
    "e123", "e12i", "e13i", "e23i", "e012", "e013", "e023", "e01i", "e02i", "e03i",
    "e123i", "e0123", "e012i", "e023i", "e013i",
    "e0123i",
)
N_BLADES = 32

# bit positions of the basis vectors, in the canonical orientation order
_BIT = {"0": 0, "1": 1, "2": 2, "3": 3, "i": 4}
E0_BIT = 1 << _BIT["0"]
EI_BIT = 1 << _BIT["i"]

MASKS = tuple(0 if name == "1" else sum(1 << _BIT[c] for c in name[1:]) for name in BLADE_NAMES)
INDEX_OF_MASK = {m: i for i, m in enumerate(MASKS)}
INDEX_OF_NAME = {name: i for i, name in enumerate(BLADE_NAMES)}
GRADES = tuple(bin(m).count("1") for m in MASKS)

# Gram matrix of the basis vectors in bit order (e0, e1, e2, e3, ei).
METRIC = (
    (0, 0, 0, 0, -1),
    (0, 1, 0, 0, 0),
    (0, 0, 1, 0, 0),
    (0, 0, 0, 1, 0),
    (-1, 0, 0, 0, 0),
)


def _blades_of(names: Iterable[str]) -> tuple:
    return tuple(sorted(INDEX_OF_NAME[n] for n in names))


def grade_blades(*grades: int) -> tuple:
    return tuple(i for i in range(N_BLADES) if GRADES[i] in grades)


# Named blade sets for the value kinds used throughout the package.
SCALAR = (0,)
VECTOR = grade_blades(1)
POINT = VECTOR
EUCLIDEAN = _blades_of(["e1", "e2", "e3"])
BIVECTOR = grade_blades(2)
POINT_PAIR = BIVECTOR
SCREW = _blades_of(["e23", "e13", "e12", "e1i", "e2i", "e3i"])
ROTATION = _blades_of(["e23", "e13", "e12"])
TRANSLATION = _blades_of(["e1i", "e2i", "e3i"])
TRIVECTOR = grade_blades(3)
CIRCLE = TRIVECTOR
LINE = _blades_of(["e12i", "e13i", "e23i", "e01i", "e02i", "e03i"])
QUADVECTOR = grade_blades(4)
SPHERE = QUADVECTOR
PLANE = _blades_of(["e123i", "e012i", "e023i", "e013i"])
PSEUDOSCALAR = (31,)
ROTOR = (0,) + ROTATION
TRANSLATOR = (0,) + TRANSLATION
MOTOR = (0,) + SCREW + _blades_of(["e123i"])
FULL = tuple(range(N_BLADES))


# ---------------------------------------------------------------------------
# blade-level products (exact integer arithmetic)


def _bits(mask: int) -> list:
    return [b for b in range(5) if mask >> b & 1]


def _wedge_sign(a: int, b: int) -> int:
    """Sign of e_a ^ e_b relative to the canonically ordered e_(a|b); 0 if they share a vector."""
    if a & b:
        return 0
    swaps = 0
    for x in _bits(a):
        swaps += bin(b & ((1 << x) - 1)).count("1")
    return -1 if swaps & 1 else 1


def _vector_times_blade(v: int, mask: int) -> dict:
    # v e_A = v ⌋ e_A + v ^ e_A
    out = defaultdict(int)
    for pos, x in enumerate(_bits(mask)):
        g = METRIC[v][x]
        if g:
            out[mask ^ (1 << x)] += g if pos % 2 == 0 else -g
    s = _wedge_sign(1 << v, mask)
    if s:
        out[mask | (1 << v)] += s
    return out


def _vector_contract(v: int, mask: int) -> dict:
    out = defaultdict(int)
    for pos, x in enumerate(_bits(mask)):
        g = METRIC[v][x]
        if g:
            out[mask ^ (1 << x)] += g if pos % 2 == 0 else -g
    return out


@functools.lru_cache(maxsize=None)
def _mask_product(a: int, b: int) -> tuple:
    """Geometric product of two basis blades as ((mask, coeff), ...).

    Uses e_A = v ^ e_R = v e_R - v ⌋ e_R with v the lowest vector of A, which
    holds for any (possibly non-diagonal) metric.
    """
    if a == 0:
        return ((b, 1),)
    low = a & -a
    v = low.bit_length() - 1
    rest = a ^ low
    out = defaultdict(int)
    for m, c in _mask_product(rest, b):
        for m2, c2 in _vector_times_blade(v, m).items():
            out[m2] += c * c2
    for m, c in _vector_contract(v, rest).items():
        for m2, c2 in _mask_product(m, b):
            out[m2] -= c * c2
    return tuple(sorted((m, c) for m, c in out.items() if c))


def _build_tables():
    gp = [[None] * N_BLADES for _ in range(N_BLADES)]
    op = [[None] * N_BLADES for _ in range(N_BLADES)]
    ip = [[None] * N_BLADES for _ in range(N_BLADES)]
    cp = [[None] * N_BLADES for _ in range(N_BLADES)]
    for i, a in enumerate(MASKS):
        for j, b in enumerate(MASKS):
            prod = {INDEX_OF_MASK[m]: c for m, c in _mask_product(a, b)}
            gp[i][j] = prod
            s = _wedge_sign(a, b)
            op[i][j] = {INDEX_OF_MASK[a | b]: s} if s else {}
            k = abs(GRADES[i] - GRADES[j])
            ip[i][j] = {r: c for r, c in prod.items() if GRADES[r] == k}
    for i in range(N_BLADES):
        for j in range(N_BLADES):
            comm = defaultdict(float)
            for r, c in gp[i][j].items():
                comm[r] += 0.5 * c
            for r, c in gp[j][i].items():
                comm[r] -= 0.5 * c
            cp[i][j] = {r: c for r, c in comm.items() if c}
    return {"gp": gp, "op": op, "ip": ip, "cp": cp}


TABLES = _build_tables()

REVERSE_SIGN = np.array([(-1.0) ** (g * (g - 1) // 2) for g in GRADES])


@functools.lru_cache(maxsize=None)
def _kernel(op: str, blades_a: tuple, blades_b: tuple):
    table = TABLES[op]
    terms = []
    for pa, i in enumerate(blades_a):
        row = table[i]
        for pb, j in enumerate(blades_b):
            for r, c in row[j].items():
                terms.append((pa, pb, r, c))
    result = tuple(sorted({t[2] for t in terms}))
    pos = {r: k for k, r in enumerate(result)}
    ia = np.array([t[0] for t in terms], dtype=np.intp)
    ib = np.array([t[1] for t in terms], dtype=np.intp)
    scatter = np.zeros((len(terms), len(result)))
    for n, t in enumerate(terms):
        scatter[n, pos[t[2]]] = t[3]
    return result, ia, ib, scatter


@functools.lru_cache(maxsize=None)
def _union(blades_a: tuple, blades_b: tuple):
    result = tuple(sorted(set(blades_a) | set(blades_b)))
    pos = {r: k for k, r in enumerate(result)}
    return result, np.array([pos[i] for i in blades_a], dtype=np.intp), np.array([pos[i] for i in blades_b], dtype=np.intp)


@functools.lru_cache(maxsize=None)
def _selection(source: tuple, target: tuple):
    """Column indices of ``target`` blades inside ``source`` (-1 where absent)."""
    pos = {r: k for k, r in enumerate(source)}
    return np.array([pos.get(i, -1) for i in target], dtype=np.intp)


@functools.lru_cache(maxsize=None)
def sandwich_blades(blades: tuple) -> tuple:
    """Blade set of ``M X ~M`` for any motor ``M``, given the blade set of ``X``.

    Motors preserve grades, fix ``ei`` (so objects built on ``ei`` stay flat)
    and commute with contraction by ``ei`` (so ``e0``-free objects stay
    ``e0``-free).
    """
    grades = {GRADES[i] for i in blades}
    flat = all(MASKS[i] & EI_BIT for i in blades)
    e0_free = all(not MASKS[i] & E0_BIT for i in blades)
    return tuple(
        i
        for i in range(N_BLADES)
        if GRADES[i] in grades and (not flat or MASKS[i] & EI_BIT) and (not e0_free or not MASKS[i] & E0_BIT)
    )


@functools.lru_cache(maxsize=None)
def scalar_product_table(blades_a: tuple, blades_b: tuple) -> np.ndarray:
    """G[a, b] = <reverse(e_a) e_b>_0, the bilinear form behind :func:`scalar_product`."""
    g = np.zeros((len(blades_a), len(blades_b)))
    for pa, i in enumerate(blades_a):
        for pb, j in enumerate(blades_b):
            g[pa, pb] = REVERSE_SIGN[i] * TABLES["gp"][i][j].get(0, 0)
    return g


def scalar_product(a: "Multivector", b: "Multivector") -> np.ndarray:
    """<reverse(a) b>_0 broadcast over batch dimensions."""
    g = scalar_product_table(a.blades, b.blades)
    return np.einsum("...a,ab,...b->...", a.coeffs, g, b.coeffs)


def product_blades(op: str, blades_a: tuple, blades_b: tuple) -> tuple:
    """Statically predicted blade set of a binary product."""
    return _kernel(op, tuple(blades_a), tuple(blades_b))[0]


# ---------------------------------------------------------------------------


class Multivector:
    """Sparse multivector with a declared blade set and batched coefficients.

    ``coeffs`` has shape ``(*batch, len(blades))``; ``blades`` is a sorted tuple
    of blade indices.  Instances are treated as immutable.
    """

    __slots__ = ("blades", "coeffs")
    __array_priority__ = 1000

    def __init__(self, blades: Sequence[int], coeffs):
        blades = tuple(blades)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0 or coeffs.shape[-1] != len(blades):
            raise ValueError(f"coefficient array of shape {coeffs.shape} does not match {len(blades)} blades")
        self.blades = blades
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, blades: Sequence[int] = SCALAR, shape: tuple = ()) -> "Multivector":
        blades = tuple(blades)
        return cls(blades, np.zeros(tuple(shape) + (len(blades),)))

    @classmethod
    def scalar(cls, value=1.0) -> "Multivector":
        value = np.asarray(value, dtype=float)
        return cls(SCALAR, value[..., None])

    @classmethod
    def from_dict(cls, terms: dict) -> "Multivector":
        """Build from ``{"e12": 2.0, "ei": 1.0}`` style mappings."""
        idx = sorted(INDEX_OF_NAME[name] for name in terms)
        by_index = {INDEX_OF_NAME[name]: value for name, value in terms.items()}
        if not idx:
            return cls.zeros(())
        return cls(tuple(idx), np.stack([np.asarray(by_index[i], dtype=float) for i in idx], axis=-1))

    @classmethod
    def blade(cls, name: str, value=1.0) -> "Multivector":
        return cls.from_dict({name: value})

    @classmethod
    def from_dense(cls, dense, blades: Sequence[int] | None = None) -> "Multivector":
        dense = np.asarray(dense, dtype=float)
        blades = FULL if blades is None else tuple(blades)
        return cls(blades, dense[..., list(blades)])

    # -- batch helpers ------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    def __getitem__(self, idx) -> "Multivector":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Multivector(self.blades, self.coeffs[idx + (slice(None),)])

    def reshape(self, *shape) -> "Multivector":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Multivector(self.blades, self.coeffs.reshape(tuple(shape) + (len(self.blades),)))

    def expand(self, axis: int) -> "Multivector":
        """Insert a batch axis (negative axes count from the last batch axis)."""
        if axis < 0:
            axis = len(self.shape) + axis + 1
        return Multivector(self.blades, np.expand_dims(self.coeffs, axis))

    def sum(self, axis=None) -> "Multivector":
        nb = len(self.shape)
        if axis is None:
            axis = tuple(range(nb))
        elif isinstance(axis, int):
            axis = (axis % nb,)
        else:
            axis = tuple(a % nb for a in axis)
        return Multivector(self.blades, self.coeffs.sum(axis=axis))

    @staticmethod
    def stack(items: Sequence["Multivector"], axis: int = 0) -> "Multivector":
        blades = tuple(sorted(set().union(*(m.blades for m in items))))
        arrs = [m.cast(blades).coeffs for m in items]
        if axis < 0:
            axis = arrs[0].ndim - 1 + axis + 1
        return Multivector(blades, np.stack(arrs, axis=axis))

    # -- coefficient access -------------------------------------------------

    def coeff(self, name):
        """Coefficient array of a blade given by name or index (zeros when absent)."""
        i = INDEX_OF_NAME[name] if isinstance(name, str) else int(name)
        if i in self.blades:
            return self.coeffs[..., self.blades.index(i)]
        return np.zeros(self.shape)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape + (N_BLADES,))
        out[..., list(self.blades)] = self.coeffs
        return out

    def cast(self, blades: Sequence[int]) -> "Multivector":
        """Re-express on another blade set, dropping absent blades and zero-filling new ones."""
        blades = tuple(blades)
        if blades == self.blades:
            return self
        sel = _selection(self.blades, blades)
        out = np.zeros(self.shape + (len(blades),))
        have = sel >= 0
        out[..., have] = self.coeffs[..., sel[have]]
        return Multivector(blades, out)

    def residual_outside(self, blades: Sequence[int]) -> np.ndarray:
        """Largest absolute coefficient on blades not in ``blades``."""
        extra = [k for k, b in enumerate(self.blades) if b not in set(blades)]
        if not extra:
            return np.zeros(self.shape)
        return np.abs(self.coeffs[..., extra]).max(axis=-1)

    def grade(self, k: int) -> "Multivector":
        if not 0 <= k <= 5:
            raise DomainError(f"grade must lie in 0..5, got {k}")
        return self.cast(tuple(b for b in self.blades if GRADES[b] == k))

    def scalar_part(self) -> np.ndarray:
        return self.coeff(0)

    def norm(self) -> np.ndarray:
        """Euclidean norm of the coefficient vector."""
        return np.sqrt(np.sum(self.coeffs**2, axis=-1))

    # -- arithmetic ---------------------------------------------------------

    def _binary(self, op: str, other: "Multivector") -> "Multivector":
        result, ia, ib, scatter = _kernel(op, self.blades, other.blades)
        terms = self.coeffs[..., ia] * other.coeffs[..., ib]
        return Multivector(result, terms @ scatter)

    def gp(self, other: "Multivector") -> "Multivector":
        return self._binary("gp", other)

    def outer(self, other: "Multivector") -> "Multivector":
        return self._binary("op", other)

    def inner(self, other: "Multivector") -> "Multivector":
        return self._binary("ip", other)

    def commutator(self, other: "Multivector") -> "Multivector":
        return self._binary("cp", other)

    def reverse(self) -> "Multivector":
        return Multivector(self.blades, self.coeffs * REVERSE_SIGN[list(self.blades)])

    def __add__(self, other):
        if not isinstance(other, Multivector):
            other = Multivector.scalar(other)
        if other.blades == self.blades:
            return Multivector(self.blades, self.coeffs + other.coeffs)
        blades, pa, pb = _union(self.blades, other.blades)
        shape = np.broadcast_shapes(self.shape, other.shape)
        out = np.zeros(shape + (len(blades),))
        out[..., pa] += self.coeffs
        out[..., pb] += other.coeffs
        return Multivector(blades, out)

    __radd__ = __add__

    def __neg__(self):
        return Multivector(self.blades, -self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, Multivector):
            other = Multivector.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return self._binary("gp", other)
        return Multivector(self.blades, self.coeffs * np.asarray(other, dtype=float)[..., None])

    def __rmul__(self, other):
        return Multivector(self.blades, self.coeffs * np.asarray(other, dtype=float)[..., None])

    def __truediv__(self, other):
        return Multivector(self.blades, self.coeffs / np.asarray(other, dtype=float)[..., None])

    def __xor__(self, other):
        return self._binary("op", other)

    def __or__(self, other):
        return self._binary("ip", other)

    def __invert__(self):
        return self.reverse()

    # -- comparison / display -----------------------------------------------

    def allclose(self, other, atol: float = 1e-12) -> bool:
        if not isinstance(other, Multivector):
            other = Multivector.scalar(other)
        blades, _, _ = _union(self.blades, other.blades)
        return bool(np.allclose(self.cast(blades).coeffs, other.cast(blades).coeffs, rtol=0.0, atol=atol))

    def __repr__(self):
        if self.shape:
            return f"Multivector(blades={[BLADE_NAMES[b] for b in self.blades]}, shape={self.shape})"
        terms = [f"{c:+.6g}{'' if b == 0 else '*' + BLADE_NAMES[b]}" for b, c in zip(self.blades, self.coeffs) if c != 0]
        return "Multivector(" + (" ".join(terms) if terms else "0") + ")"


# ---------------------------------------------------------------------------
# free functions


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    return a.gp(b)


def outer_product(a: Multivector, b: Multivector) -> Multivector:
    return a.outer(b)


def inner_product(a: Multivector, b: Multivector) -> Multivector:
    """Grade-selecting inner product: <A_r B_s>_{|r-s|} summed over grade pairs."""
    return a.inner(b)


def commutator(a: Multivector, b: Multivector) -> Multivector:
    """Commutator product (ab - ba) / 2."""
    return a.commutator(b)


def reverse(a: Multivector) -> Multivector:
    return a.reverse()


def grade_project(a: Multivector, k: int) -> Multivector:
    return a.grade(k)


I = Multivector(PSEUDOSCALAR, [1.0])
E0 = Multivector.blade("e0")
EI = Multivector.blade("ei")
I3 = Multivector.blade("e123")


def dual(a: Multivector) -> Multivector:
    """Multiplication by the pseudoscalar e0123i from the left."""
    return I.gp(a)


def sandwich(m: Multivector, x: Multivector) -> Multivector:
    """``m x ~m`` restricted to the blades a rigid motion can reach from ``x``."""
    return m.gp(x).gp(m.reverse()).cast(sandwich_blades(x.blades))


def embed_point(x) -> Multivector:
    """Conformal embedding x + |x|^2/2 ei + e0 of Euclidean points ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (3,):
        raise ValueError("embed_point expects coordinates with a trailing axis of length 3")
    half_sq = 0.5 * np.sum(x * x, axis=-1, keepdims=True)
    return Multivector(POINT, np.concatenate([x, half_sq, np.ones_like(half_sq)], axis=-1))


def extract_point(p: Multivector, rtol: float = 1e-12) -> np.ndarray:
    """Euclidean coordinates of a conformal point, normalised by -(ei . P)."""
    weight = -(EI.inner(p).scalar_part())
    scale = np.maximum(p.norm(), 1.0)
    if np.any(np.abs(weight) <= rtol * scale):
        raise DomainError("point at infinity: -(ei . P) vanishes")
    return np.stack([p.coeff("e1"), p.coeff("e2"), p.coeff("e3")], axis=-1) / weight[..., None]


def euclidean_vector(v) -> Multivector:
    v = np.asarray(v, dtype=float)
    return Multivector(EUCLIDEAN, v)
