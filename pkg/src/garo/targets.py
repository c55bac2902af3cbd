"""Reaching-target literals, including scripted moving targets.

A literal is ``kind:x,y,z[;x,y,z...]``.  Besides the primitive kinds of
:mod:`garo.primitives` two task kinds are accepted:

* ``pointing:x,y,z`` keeps a point on the end-effector z-axis;
* ``grasp:p1;p2;p3`` grasps the circle through three points.

Coordinates may be arithmetic expressions in the time ``t`` (seconds), e.g.
``point:0.5,0.2*sin(t),0.4``.  Only numbers, ``t``, ``pi``, ``e``, the
operators ``+ - * / **`` and the functions below are allowed.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import E0, Multivector, embed_point
from .errors import ConfigError
from .primitives import _CONSTRUCTORS, _parse_coords

_FUNCS = {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}

TASK_KINDS = ("point", "pointpair", "line", "circle", "plane", "sphere", "pointing", "grasp")


def compile_expression(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile a coordinate expression into a vectorised function of ``t``."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse coordinate expression {text!r}") from exc

    def ev(node, t):
        if isinstance(node, ast.Expression):
            return ev(node.body, t)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id == "t":
                return t
            if node.id in _CONSTS:
                return _CONSTS[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, t), ev(node.right, t))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand, t))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0], t))
        raise ConfigError(f"unsupported element in coordinate expression {text!r}")

    ev(tree, np.zeros(1))  # validate once
    return lambda t: np.asarray(ev(tree, np.asarray(t, dtype=float)), dtype=float) + np.zeros(np.shape(t))


def _uses_time(text: str) -> bool:
    return any(isinstance(n, ast.Name) and n.id == "t" for n in ast.walk(ast.parse(text.strip(), mode="eval")))


def normalize(x: Multivector) -> Multivector:
    """Scale a primitive (or a batch of them) to unit coefficient norm."""
    n = x.norm()
    if np.any(n <= 0.0):
        raise ConfigError("target primitive vanishes")
    return Multivector(x.blades, x.coeffs / n[..., None])


@dataclass
class TargetSpec:
    """A parsed target: the primitive kind it builds and the tool it is reached with."""

    text: str
    kind: str  # task kind, one of TASK_KINDS
    primitive_kind: str  # kind passed to the primitive constructor
    coords: list  # per point, three compiled expressions
    moving: bool

    def points_at(self, t) -> list:
        t = np.asarray(t, dtype=float)
        return [np.stack([f(t) for f in group], axis=-1) for group in self.coords]

    def primitive_at(self, t) -> Multivector:
        """The (unit-normalised) target primitive at time(s) ``t``."""
        _, ctor = _CONSTRUCTORS[self.primitive_kind]
        pts = [embed_point(p) for p in self.points_at(t)]
        x = pts[0] if self.primitive_kind == "point" else ctor(*pts)
        return normalize(x)

    def static(self) -> Multivector:
        return self.primitive_at(0.0)

    def as_target(self):
        """A fixed primitive, or a function of time for moving targets."""
        return self.primitive_at if self.moving else self.static()


def parse_target(text: str) -> TargetSpec:
    if ":" not in text:
        raise ConfigError(f"target literal {text!r} lacks a 'kind:' prefix")
    kind, body = text.split(":", 1)
    kind = kind.strip().lower()
    if kind not in TASK_KINDS:
        raise ConfigError(f"unknown target kind {kind!r}; expected one of {', '.join(TASK_KINDS)}")
    primitive_kind = {"pointing": "point", "grasp": "circle"}.get(kind, kind)
    n, _ = _CONSTRUCTORS[primitive_kind]
    groups = body.split(";")
    if len(groups) != n:
        raise ConfigError(f"{kind} needs {n} point(s), got {len(groups)}")
    raw = [_parse_coords(g) for g in groups]
    coords = [[compile_expression(c) for c in g] for g in raw]
    moving = any(_uses_time(c) for g in raw for c in g)
    spec = TargetSpec(text, kind, primitive_kind, coords, moving)
    spec.static()  # surface degenerate constructions early
    return spec


def default_tool(kind: str) -> Multivector:
    from .costs import tool_line

    return tool_line() if kind == "pointing" else E0
