"""Serial revolute manipulators: joints, links and robot description files.

Each joint carries a constant frame motor ``M_F`` (translation after a fixed
rotation) and a unit rotation plane ``B``; the joint motor is
``M_F R(q)`` with ``R(q) = cos(q/2) - sin(q/2) B``.  Link centres of mass and
inertia tensors are expressed in the joint frame after the joint rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .algebra import MOTOR, ROTOR, ROTATION, Multivector
from .errors import ModelLoadError
from .motors import identity_motor, make_rotor, make_translator, motor_constraint_residual

PLANE_NAMES = {"e23": (1.0, 0.0, 0.0), "e13": (0.0, 1.0, 0.0), "e12": (0.0, 0.0, 1.0)}


def axis_to_plane(axis) -> np.ndarray:
    """Rotation plane (e23, e13, e12 coordinates) for a right-handed turn about ``axis``."""
    a = np.asarray(axis, dtype=float)
    return np.array([a[0], -a[1], a[2]])


def plane_to_axis(plane) -> np.ndarray:
    p = np.asarray(plane, dtype=float)
    return np.array([p[..., 0], -p[..., 1], p[..., 2]]).T if p.ndim > 1 else np.array([p[0], -p[1], p[2]])


def axis_angle_rotor(axis, angle) -> Multivector:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0 or angle == 0.0:
        return Multivector(ROTOR, [1.0, 0.0, 0.0, 0.0])
    return make_rotor(axis_to_plane(axis / n), angle)


def frame_motor(translation, axis=(1.0, 0.0, 0.0), angle=0.0) -> Multivector:
    """Motor of a frame placed at ``translation`` with a fixed axis-angle rotation."""
    t = make_translator(np.asarray(translation, dtype=float))
    return (t * axis_angle_rotor(axis, angle)).cast(MOTOR)


@dataclass(frozen=True)
class Link:
    mass: float
    com: np.ndarray
    inertia: np.ndarray  # 3x3, about the centre of mass, link frame

    @staticmethod
    def from_params(mass, com, inertia6) -> "Link":
        ixx, iyy, izz, ixy, ixz, iyz = (float(v) for v in inertia6)
        tensor = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
        return Link(float(mass), np.asarray(com, dtype=float), tensor)

    def inertia_params(self) -> list:
        I = self.inertia
        return [I[0, 0], I[1, 1], I[2, 2], I[0, 1], I[0, 2], I[1, 2]]


@dataclass(frozen=True)
class Joint:
    name: str
    translation: np.ndarray
    rotation_axis: np.ndarray
    rotation_angle: float
    plane: np.ndarray  # unit coordinates on (e23, e13, e12)
    limits: tuple
    frame: Multivector = field(repr=False, default=None)

    def __post_init__(self):
        if self.frame is None:
            object.__setattr__(self, "frame", frame_motor(self.translation, self.rotation_axis, self.rotation_angle))

    @property
    def rotation_plane(self) -> Multivector:
        return Multivector(ROTATION, self.plane)

    def motor(self, q) -> Multivector:
        """M_F R(q)."""
        return (self.frame * make_rotor(self.plane, q)).cast(MOTOR)


@dataclass(frozen=True)
class RobotModel:
    name: str
    joints: tuple
    links: tuple
    gravity: float = 9.81
    tool: Multivector = field(default_factory=identity_motor, repr=False)
    tool_translation: np.ndarray = field(default_factory=lambda: np.zeros(3), repr=False)
    tool_axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]), repr=False)
    tool_angle: float = 0.0

    def __post_init__(self):
        n = len(self.joints)
        if n < 1 or len(self.links) != n:
            raise ModelLoadError("a model needs N >= 1 joints and exactly one link per joint")
        # stacked per-joint data used by the vectorised kinematics
        object.__setattr__(self, "_frames", Multivector.stack([j.frame for j in self.joints]))
        object.__setattr__(self, "_planes", np.stack([j.plane for j in self.joints]))

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def frames(self) -> Multivector:
        return self._frames

    @property
    def planes(self) -> np.ndarray:
        return self._planes

    @property
    def lower(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    @property
    def masses(self) -> np.ndarray:
        return np.array([l.mass for l in self.links])

    @property
    def coms(self) -> np.ndarray:
        return np.stack([l.com for l in self.links])

    @property
    def inertias(self) -> np.ndarray:
        return np.stack([l.inertia for l in self.links])

    @property
    def reach(self) -> float:
        """Upper bound on the distance from the base to the tool point."""
        return float(sum(np.linalg.norm(j.translation) for j in self.joints) + np.linalg.norm(self.tool_translation))

    def sample_configurations(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dof))

    def with_gravity(self, g: float) -> "RobotModel":
        return RobotModel(self.name, self.joints, self.links, g, self.tool, self.tool_translation, self.tool_axis, self.tool_angle)

    def to_document(self) -> dict:
        doc = {"name": self.name, "gravity": float(self.gravity), "joints": []}
        for j, l in zip(self.joints, self.links):
            doc["joints"].append(
                {
                    "name": j.name,
                    "type": "revolute",
                    "translation": [float(v) for v in j.translation],
                    "fixed_rotation": {"axis": [float(v) for v in j.rotation_axis], "angle": float(j.rotation_angle)},
                    "rotation_plane": [float(v) for v in j.plane],
                    "limits": [float(j.limits[0]), float(j.limits[1])],
                    "link": {
                        "mass": float(l.mass),
                        "com": [float(v) for v in l.com],
                        "inertia": [float(v) for v in l.inertia_params()],
                    },
                }
            )
        if np.any(self.tool_translation != 0.0) or self.tool_angle != 0.0:
            doc["tool"] = {
                "translation": [float(v) for v in self.tool_translation],
                "fixed_rotation": {"axis": [float(v) for v in self.tool_axis], "angle": float(self.tool_angle)},
            }
        return doc

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_document(), sort_keys=False)


# -- loading -------------------------------------------------------------------


def _vec3(value, what: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(f"{what} must be three numbers") from exc
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ModelLoadError(f"{what} must be three finite numbers, got {value!r}")
    return arr


def _rotation(spec, what: str):
    if spec is None:
        return np.array([1.0, 0.0, 0.0]), 0.0
    if not isinstance(spec, dict) or "axis" not in spec or "angle" not in spec:
        raise ModelLoadError(f"{what} needs 'axis' and 'angle'")
    axis = _vec3(spec["axis"], f"{what}.axis")
    angle = float(spec["angle"])
    if angle != 0.0 and np.linalg.norm(axis) == 0.0:
        raise ModelLoadError(f"{what}.axis must be nonzero")
    return axis, angle


def _plane(spec, what: str) -> np.ndarray:
    if isinstance(spec, str):
        if spec not in PLANE_NAMES:
            raise ModelLoadError(f"{what} must be one of e23, e13, e12 or three coefficients")
        return np.array(PLANE_NAMES[spec])
    if isinstance(spec, dict):
        spec = [spec.get("e23", 0.0), spec.get("e13", 0.0), spec.get("e12", 0.0)]
    p = _vec3(spec, what)
    if abs(np.linalg.norm(p) - 1.0) > 1e-9:
        raise ModelLoadError(f"{what} must be a unit bivector, norm is {np.linalg.norm(p)}")
    return p


def _link(spec, what: str) -> Link:
    if not isinstance(spec, dict):
        raise ModelLoadError(f"{what} must be a mapping with mass, com and inertia")
    try:
        mass = float(spec["mass"])
        com = _vec3(spec.get("com", [0.0, 0.0, 0.0]), f"{what}.com")
        inertia = [float(v) for v in spec["inertia"]]
    except KeyError as exc:
        raise ModelLoadError(f"{what} is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ModelLoadError(f"{what} has a non-numeric entry") from exc
    if mass <= 0.0:
        raise ModelLoadError(f"{what}.mass must be positive")
    if len(inertia) != 6:
        raise ModelLoadError(f"{what}.inertia must list Ixx, Iyy, Izz, Ixy, Ixz, Iyz")
    link = Link.from_params(mass, com, inertia)
    eig = np.linalg.eigvalsh(link.inertia)
    if eig[0] <= 0.0:
        raise ModelLoadError(f"{what}.inertia is not positive definite (eigenvalues {eig})")
    tol = 1e-12 * eig[-1]
    if eig[0] + eig[1] < eig[2] - tol:
        raise ModelLoadError(f"{what}.inertia violates the triangle inequality of principal moments")
    return link


def model_from_document(doc: dict) -> RobotModel:
    if not isinstance(doc, dict):
        raise ModelLoadError("robot description must be a mapping")
    joints_spec = doc.get("joints")
    if not isinstance(joints_spec, list) or not joints_spec:
        raise ModelLoadError("robot description needs a non-empty 'joints' list")
    joints, links = [], []
    for k, js in enumerate(joints_spec):
        what = f"joints[{k}]"
        if not isinstance(js, dict):
            raise ModelLoadError(f"{what} must be a mapping")
        kind = js.get("type", "revolute")
        if kind != "revolute":
            raise ModelLoadError(f"{what}: only revolute joints are supported, got {kind!r}")
        if "rotation_plane" not in js:
            raise ModelLoadError(f"{what} is missing 'rotation_plane'")
        translation = _vec3(js.get("translation", [0.0, 0.0, 0.0]), f"{what}.translation")
        axis, angle = _rotation(js.get("fixed_rotation"), f"{what}.fixed_rotation")
        plane = _plane(js["rotation_plane"], f"{what}.rotation_plane")
        limits = js.get("limits", [-np.pi, np.pi])
        try:
            lo, hi = (float(v) for v in limits)
        except (TypeError, ValueError) as exc:
            raise ModelLoadError(f"{what}.limits must be [lo, hi]") from exc
        if not lo < hi:
            raise ModelLoadError(f"{what}.limits must satisfy lo < hi")
        joints.append(Joint(str(js.get("name", f"joint{k + 1}")), translation, axis, angle, plane, (lo, hi)))
        if "link" not in js:
            raise ModelLoadError(f"{what} is missing 'link'")
        links.append(_link(js["link"], f"{what}.link"))
    tool_t = np.zeros(3)
    tool_axis, tool_angle = np.array([1.0, 0.0, 0.0]), 0.0
    if "tool" in doc and doc["tool"] is not None:
        tool_t = _vec3(doc["tool"].get("translation", [0.0, 0.0, 0.0]), "tool.translation")
        tool_axis, tool_angle = _rotation(doc["tool"].get("fixed_rotation"), "tool.fixed_rotation")
    try:
        gravity = float(doc.get("gravity", 9.81))
    except (TypeError, ValueError) as exc:
        raise ModelLoadError("gravity must be a number") from exc
    model = RobotModel(
        str(doc.get("name", "robot")),
        tuple(joints),
        tuple(links),
        gravity,
        frame_motor(tool_t, tool_axis, tool_angle),
        tool_t,
        tool_axis,
        tool_angle,
    )
    if motor_constraint_residual(model.frames).max() > 1e-12:
        raise ModelLoadError("frame motors violate the motor constraint")
    return model


def loads_model(text: str) -> RobotModel:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelLoadError(f"cannot parse robot description: {exc}") from exc
    return model_from_document(doc)


def load_model(source) -> RobotModel:
    """Load a robot description from a path, a shipped model name, or a mapping."""
    if isinstance(source, dict):
        return model_from_document(source)
    path = Path(source)
    if not path.exists():
        shipped = resources.files("garo") / "models" / (str(source) if str(source).endswith(".model") else f"{source}.model")
        if shipped.is_file():
            return loads_model(shipped.read_text())
        raise ModelLoadError(f"robot description {source!r} not found")
    return loads_model(path.read_text())


# -- DH conversion -----------------------------------------------------------


def dh_to_frame(a: float, d: float, alpha: float):
    """Frame (translation, axis, angle) of a modified (Craig) DH row; the joint turns in e12.

    The row transform Rx(alpha) Tx(a) Tz(d) Rz(theta) equals a translation
    ``(a, -d sin(alpha), d cos(alpha))`` after which the frame is rotated
    about x by alpha.
    """
    translation = np.array([a, -d * np.sin(alpha), d * np.cos(alpha)])
    return translation, np.array([1.0, 0.0, 0.0]), float(alpha)


def model_from_dh(name: str, rows: Sequence, links: Sequence[Link], limits: Sequence, gravity=9.81, tool=None) -> RobotModel:
    joints = []
    for k, (a, d, alpha) in enumerate(rows):
        t, axis, angle = dh_to_frame(a, d, alpha)
        joints.append(Joint(f"joint{k + 1}", t, axis, angle, np.array(PLANE_NAMES["e12"]), tuple(limits[k])))
    doc_tool = np.zeros(3) if tool is None else np.asarray(tool, dtype=float)
    return RobotModel(name, tuple(joints), tuple(links), gravity, frame_motor(doc_tool), doc_tool)
