"""Rigid-body model of a serial manipulator and its contact dynamics.

The model is a fixed-base kinematic chain loaded from a YAML description:
per link a 1-DoF joint (revolute or prismatic, arbitrary fixed origin and
axis), the link mass, centre of mass and rotational inertia about the COM,
all in the link frame.  On top of the chain this module provides

  * forward kinematics and the translational point Jacobian,
  * the joint-space mass matrix via the composite-rigid-body algorithm,
  * the directional reflected (effective) mass at a contact point,
        m_u = 1 / (u^T (J M^-1 J^T) u)
    i.e. the apparent mass a collision along unit direction u runs into,
  * the constant effective-mass convention used by power-and-force-limiting
    practice: half the total moving link mass plus payload,
  * damped-least-squares inverse kinematics.

Angular quantities use the world frame; spatial vectors inside the mass
matrix computation are ordered (angular, linear).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence, Union

import numpy as np
import yaml

from .errors import (ConstrainedDirectionError, DomainError, SchemaError,
                     ValidationError)

#: below this value of u^T (J M^-1 J^T) u [1/kg] a direction is treated as
#: structurally constrained (no feasible motion, reflected mass unbounded)
SINGULAR_GUARD = 1e-9

#: flange orientation used by workspace analyses: tool axis pointing down,
#: tool x aligned with world x
FLANGE_DOWN = np.array([[1.0, 0.0, 0.0],
                        [0.0, -1.0, 0.0],
                        [0.0, 0.0, -1.0]])


@dataclass(frozen=True, eq=False)
class Joint:
    kind: str                 # "revolute" | "prismatic"
    origin: np.ndarray        # 4x4 fixed transform, parent link -> joint frame
    axis: np.ndarray          # unit vector in the joint frame
    lower: float
    upper: float


@dataclass(frozen=True, eq=False)
class Link:
    name: str
    joint: Joint
    mass: float
    com: np.ndarray           # 3, in link frame
    inertia: np.ndarray       # 3x3 about COM, in link frame
    moving: bool = True       # counts toward the moving-mass total


@dataclass(frozen=True, eq=False)
class ManipulatorModel:
    name: str
    links: tuple[Link, ...]
    ee_offset: np.ndarray     # 4x4, last link frame -> tool/contact frame

    @property
    def n(self) -> int:
        return len(self.links)

    @property
    def lower_limits(self) -> np.ndarray:
        return np.array([ln.joint.lower for ln in self.links])

    @property
    def upper_limits(self) -> np.ndarray:
        return np.array([ln.joint.upper for ln in self.links])


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation matrix from fixed-axis roll/pitch/yaw (x, then y, then z)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def make_transform(xyz: Sequence[float], rpy: Sequence[float]) -> np.ndarray:
    t = np.eye(4)
    t[:3, :3] = rpy_matrix(*rpy)
    t[:3, 3] = xyz
    return t


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    c, s = math.cos(angle), math.sin(angle)
    k = _skew(axis)
    return np.eye(3) * c + s * k + (1.0 - c) * np.outer(axis, axis)


# ---------------------------------------------------------------- loading

ModelSource = Union[str, Path, IO[str]]


def load_robot_model(source: ModelSource) -> ManipulatorModel:
    """Load and validate a manipulator description from YAML."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    else:
        raw = yaml.safe_load(source)
    if not isinstance(raw, dict):
        raise SchemaError("robot model: top level must be a mapping")
    try:
        name = str(raw.get("name", "robot"))
        link_specs = raw["links"]
    except KeyError as exc:
        raise SchemaError(f"robot model: missing key {exc}") from None
    if not isinstance(link_specs, list) or not link_specs:
        raise SchemaError("robot model: 'links' must be a non-empty list")

    links = []
    for idx, spec in enumerate(link_specs):
        links.append(_parse_link(idx, spec))

    ee_spec = raw.get("end_effector", {"xyz": [0, 0, 0], "rpy": [0, 0, 0]})
    ee_offset = make_transform(ee_spec.get("xyz", [0, 0, 0]),
                               ee_spec.get("rpy", [0, 0, 0]))
    return ManipulatorModel(name=name, links=tuple(links), ee_offset=ee_offset)


def _parse_link(idx: int, spec: dict) -> Link:
    where = f"link {idx} ({spec.get('name', '?')})"
    try:
        jspec = spec["joint"]
        mass = float(spec["mass"])
        com = np.asarray(spec["com"], dtype=float)
        ispec = spec["inertia"]
    except KeyError as exc:
        raise SchemaError(f"{where}: missing key {exc}") from None

    kind = jspec.get("type", "revolute")
    if kind not in ("revolute", "prismatic"):
        raise SchemaError(f"{where}: unsupported joint type {kind!r}")
    axis = np.asarray(jspec.get("axis", [0, 0, 1]), dtype=float)
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        raise ValidationError(f"{where}: joint axis must be non-zero")
    axis = axis / norm
    lower = float(jspec.get("lower", -math.inf))
    upper = float(jspec.get("upper", math.inf))
    if not lower < upper:
        raise ValidationError(f"{where}: joint limits must satisfy lower < upper")

    if mass < 0 or not math.isfinite(mass):
        raise ValidationError(f"{where}: mass must be finite and >= 0")
    if com.shape != (3,):
        raise SchemaError(f"{where}: com must be a 3-vector")
    inertia = np.array([
        [float(ispec["ixx"]), float(ispec.get("ixy", 0.0)), float(ispec.get("ixz", 0.0))],
        [float(ispec.get("ixy", 0.0)), float(ispec["iyy"]), float(ispec.get("iyz", 0.0))],
        [float(ispec.get("ixz", 0.0)), float(ispec.get("iyz", 0.0)), float(ispec["izz"])],
    ])
    eigmin = float(np.linalg.eigvalsh(inertia)[0])
    if eigmin < -1e-10:
        raise ValidationError(
            f"{where}: inertia tensor not positive semi-definite "
            f"(min eigenvalue {eigmin:g})")

    origin = make_transform(jspec.get("xyz", [0, 0, 0]), jspec.get("rpy", [0, 0, 0]))
    joint = Joint(kind=kind, origin=origin, axis=axis, lower=lower, upper=upper)
    return Link(name=str(spec.get("name", f"link{idx + 1}")), joint=joint,
                mass=mass, com=com, inertia=inertia,
                moving=bool(spec.get("moving", True)))


# ------------------------------------------------------------- kinematics

def _check_q(model: ManipulatorModel, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n,):
        raise DomainError(f"q must have shape ({model.n},), got {q.shape}")
    return q


def joint_transform(link: Link, qi: float) -> np.ndarray:
    """Parent-link-frame -> link-frame transform at joint value qi."""
    t = link.joint.origin.copy()
    if link.joint.kind == "revolute":
        t[:3, :3] = t[:3, :3] @ _axis_rotation(link.joint.axis, qi)
    else:
        t[:3, 3] = t[:3, 3] + t[:3, :3] @ (link.joint.axis * qi)
    return t


def link_frames(model: ManipulatorModel, q: np.ndarray) -> list[np.ndarray]:
    """World pose of every link frame (list of 4x4, chain order)."""
    q = _check_q(model, q)
    frames = []
    t = np.eye(4)
    for link, qi in zip(model.links, q):
        t = t @ joint_transform(link, qi)
        frames.append(t)
    return frames


def forward_kinematics(model: ManipulatorModel, q: np.ndarray) -> np.ndarray:
    """World pose (4x4) of the tool/contact frame."""
    return link_frames(model, q)[-1] @ model.ee_offset


def _contact_point(model: ManipulatorModel, frames: list[np.ndarray],
                   link_index: int | None,
                   local_point: np.ndarray | None) -> tuple[int, np.ndarray]:
    idx = model.n - 1 if link_index is None else link_index
    if not 0 <= idx < model.n:
        raise DomainError(f"link_index out of range: {link_index!r}")
    frame = frames[idx]
    if local_point is None:
        if idx == model.n - 1:
            p = (frame @ model.ee_offset)[:3, 3]
        else:
            p = frame[:3, 3]
    else:
        local = np.asarray(local_point, dtype=float)
        p = frame[:3, :3] @ local + frame[:3, 3]
    return idx, p


def point_jacobian(model: ManipulatorModel, q: np.ndarray,
                   link_index: int | None = None,
                   local_point: np.ndarray | None = None) -> np.ndarray:
    """Translational Jacobian (3 x n) of a contact point.

    Defaults to the tool frame origin on the last link.  Columns of joints
    distal to the contact link are zero.
    """
    frames = link_frames(model, q)
    idx, p = _contact_point(model, frames, link_index, local_point)
    jac = np.zeros((3, model.n))
    for i, link in enumerate(model.links[: idx + 1]):
        frame = frames[i]
        axis_w = frame[:3, :3] @ link.joint.axis
        if link.joint.kind == "revolute":
            jac[:, i] = np.cross(axis_w, p - frame[:3, 3])
        else:
            jac[:, i] = axis_w
    return jac


def frame_jacobian(model: ManipulatorModel, q: np.ndarray) -> np.ndarray:
    """Full 6 x n Jacobian of the tool frame, rows (linear; angular)."""
    frames = link_frames(model, q)
    p = (frames[-1] @ model.ee_offset)[:3, 3]
    jac = np.zeros((6, model.n))
    for i, link in enumerate(model.links):
        frame = frames[i]
        axis_w = frame[:3, :3] @ link.joint.axis
        if link.joint.kind == "revolute":
            jac[:3, i] = np.cross(axis_w, p - frame[:3, 3])
            jac[3:, i] = axis_w
        else:
            jac[:3, i] = axis_w
    return jac


def manipulability(model: ManipulatorModel, q: np.ndarray) -> float:
    """Translational manipulability sqrt(det(J J^T)) at the tool point."""
    j = point_jacobian(model, q)
    return math.sqrt(max(float(np.linalg.det(j @ j.T)), 0.0))


# ------------------------------------------------------------ mass matrix

def _spatial_inertia(link: Link) -> np.ndarray:
    """6x6 spatial inertia of a link in its own frame, (angular, linear)."""
    cx = _skew(link.com)
    out = np.zeros((6, 6))
    out[:3, :3] = link.inertia + link.mass * (cx @ cx.T)
    out[:3, 3:] = link.mass * cx
    out[3:, :3] = link.mass * cx.T
    out[3:, 3:] = link.mass * np.eye(3)
    return out


def _spatial_transform(t_pc: np.ndarray) -> np.ndarray:
    """Motion-vector transform child <- parent from child pose t_pc."""
    r = t_pc[:3, :3]
    p = t_pc[:3, 3]
    x = np.zeros((6, 6))
    x[:3, :3] = r.T
    x[3:, 3:] = r.T
    x[3:, :3] = -r.T @ _skew(p)
    return x


def mass_matrix(model: ManipulatorModel, q: np.ndarray) -> np.ndarray:
    """Joint-space mass matrix M(q) by the composite-rigid-body algorithm."""
    q = _check_q(model, q)
    n = model.n
    xs = []      # motion transform parent frame -> link frame
    subspaces = []
    for link, qi in zip(model.links, q):
        xs.append(_spatial_transform(joint_transform(link, qi)))
        s = np.zeros(6)
        if link.joint.kind == "revolute":
            s[:3] = link.joint.axis
        else:
            s[3:] = link.joint.axis
        subspaces.append(s)

    composite = [_spatial_inertia(link) for link in model.links]
    m = np.zeros((n, n))
    for i in range(n - 1, -1, -1):
        if i > 0:
            composite[i - 1] = composite[i - 1] + xs[i].T @ composite[i] @ xs[i]
        f = composite[i] @ subspaces[i]
        m[i, i] = subspaces[i] @ f
        j = i
        while j > 0:
            f = xs[j].T @ f
            j -= 1
            m[i, j] = m[j, i] = f @ subspaces[j]
    return m


# -------------------------------------------------------- reflected mass

@dataclass(frozen=True, eq=False)
class ReflectedMassQuery:
    """Directional effective-mass request at a contact point."""

    q: np.ndarray
    u: np.ndarray                        # unit direction, world frame
    link_index: int | None = None        # default: last link
    local_point: np.ndarray | None = None  # default: tool frame origin

    def __post_init__(self) -> None:
        u = np.asarray(self.u, dtype=float)
        if u.shape != (3,):
            raise ValidationError(f"u must be a 3-vector, got shape {u.shape}")
        if abs(np.linalg.norm(u) - 1.0) > 1e-9:
            raise ValidationError(
                f"u must be a unit vector (|u| = {np.linalg.norm(u):.12g})")


def reflected_mass(model: ManipulatorModel, query: ReflectedMassQuery) -> float:
    """Effective mass [kg] felt by a collision along query.u.

    m_u = (u^T Lambda^-1 u)^-1 with Lambda^-1 = J M^-1 J^T the inverse
    operational-space inertia at the contact point.  Directions with no
    feasible motion raise ConstrainedDirectionError.
    """
    q = _check_q(model, query.q)
    jac = point_jacobian(model, q, query.link_index, query.local_point)
    m = mass_matrix(model, q)
    lam_inv = jac @ np.linalg.solve(m, jac.T)
    u = np.asarray(query.u, dtype=float)
    s = float(u @ lam_inv @ u)
    if s < SINGULAR_GUARD:
        raise ConstrainedDirectionError(
            f"direction {u.tolist()} is structurally constrained "
            f"(u^T Lambda^-1 u = {s:.3g} 1/kg)")
    return 1.0 / s


def iso_effective_mass(model: ManipulatorModel, payload: float = 0.0) -> float:
    """Constant effective robot mass: half the moving link mass plus payload.

    "Moving" links are those whose mass can translate toward a person
    (links marked ``moving: false`` in the model file are excluded).
    """
    if payload < 0 or not math.isfinite(payload):
        raise DomainError(f"payload must be finite and >= 0, got {payload!r}")
    total = sum(link.mass for link in model.links if link.moving)
    return 0.5 * total + payload


# --------------------------------------------------------------------- IK

@dataclass(frozen=True, eq=False)
class IKResult:
    q: np.ndarray
    success: bool
    iterations: int
    position_error: float
    orientation_error: float


def _rotation_error(r_target: np.ndarray, r_current: np.ndarray) -> np.ndarray:
    """Axis-angle error vector (world frame) rotating current onto target."""
    r_err = r_target @ r_current.T
    cos_angle = (np.trace(r_err) - 1.0) / 2.0
    cos_angle = min(1.0, max(-1.0, cos_angle))
    angle = math.acos(cos_angle)
    if angle < 1e-12:
        return np.zeros(3)
    axis = np.array([r_err[2, 1] - r_err[1, 2],
                     r_err[0, 2] - r_err[2, 0],
                     r_err[1, 0] - r_err[0, 1]])
    norm = np.linalg.norm(axis)
    if norm < 1e-12:
        # angle ~ pi: pull the axis from the diagonal
        idx = int(np.argmax(np.diag(r_err)))
        axis = np.sqrt(np.maximum((np.diag(r_err) + 1.0) / 2.0, 0.0))
        axis[(idx + 1) % 3] *= math.copysign(1.0, r_err[idx, (idx + 1) % 3])
        axis[(idx + 2) % 3] *= math.copysign(1.0, r_err[idx, (idx + 2) % 3])
        return angle * axis / np.linalg.norm(axis)
    return angle * axis / norm


def inverse_kinematics(model: ManipulatorModel, target: np.ndarray,
                       seed: np.ndarray, orientation: np.ndarray | None = None,
                       pos_tol: float = 1e-4, ori_tol: float = 1e-3,
                       max_iter: int = 200, damping: float = 1e-3,
                       step_clamp: float = 0.2) -> IKResult:
    """Damped-least-squares IK for the tool point (optionally full pose).

    Iterates q += J^T (J J^T + damping^2 I)^-1 e with each update clamped to
    ``step_clamp`` (largest joint move per iteration) and the result clipped
    to joint limits.  Success requires position error < pos_tol, and
    orientation error < ori_tol when a target orientation is given.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (3,):
        raise DomainError(f"target must be a 3-vector, got {target.shape}")
    lower, upper = model.lower_limits, model.upper_limits
    q = np.clip(np.asarray(seed, dtype=float).copy(), lower, upper)

    pos_err = ori_err = math.inf
    for iteration in range(max_iter + 1):
        t_ee = forward_kinematics(model, q)
        err_p = target - t_ee[:3, 3]
        pos_err = float(np.linalg.norm(err_p))
        if orientation is None:
            ori_err = 0.0
            if pos_err < pos_tol:
                return IKResult(q, True, iteration, pos_err, ori_err)
            err = err_p
            jac = point_jacobian(model, q)
        else:
            err_o = _rotation_error(orientation, t_ee[:3, :3])
            ori_err = float(np.linalg.norm(err_o))
            if pos_err < pos_tol and ori_err < ori_tol:
                return IKResult(q, True, iteration, pos_err, ori_err)
            err = np.concatenate([err_p, err_o])
            jac = frame_jacobian(model, q)
        if iteration == max_iter:
            break
        jjt = jac @ jac.T
        jjt[np.diag_indices_from(jjt)] += damping * damping
        step = jac.T @ np.linalg.solve(jjt, err)
        biggest = float(np.max(np.abs(step)))
        if biggest > step_clamp:
            step *= step_clamp / biggest
        q = np.clip(q + step, lower, upper)

    return IKResult(q, False, max_iter, pos_err, ori_err)
