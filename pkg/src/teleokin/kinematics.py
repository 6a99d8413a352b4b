"""Serial-chain kinematics for a 9-joint arm (6-DoF manipulator carrying a
3-DoF instrument) described by standard DH rows, plus the shaft-centerline
geometry used by the entry-sphere constraint."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .quat import Quaternion, UnitQuaternion

REVOLUTE = "revolute"
PRISMATIC = "prismatic"


@dataclass(frozen=True)
class JointSpec:
    """One standard-DH row. Lengths in meters, angles in radians."""
    a: float = 0.0
    alpha: float = 0.0
    d: float = 0.0
    theta_offset: float = 0.0
    kind: str = REVOLUTE

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ValueError(f"unknown joint kind {self.kind!r}")


@dataclass(frozen=True)
class Pose:
    r: UnitQuaternion
    t: Quaternion

    def __post_init__(self):
        if not self.t.is_pure():
            raise ValueError("pose translation must be a pure quaternion")


@dataclass(frozen=True)
class ShaftLine:
    """Instrument shaft centerline: anchor point p, unit direction l."""
    p: Quaternion
    l: Quaternion

    def __post_init__(self):
        if not (self.p.is_pure() and self.l.is_pure()):
            raise ValueError("shaft line components must be pure quaternions")
        if abs(self.l.norm() - 1.0) > 1e-9:
            raise ValueError("shaft direction must be a unit vector")


@dataclass
class RobotModel:
    """A 9-joint chain with limits, base placement, and shaft geometry.

    shaft_joint_index selects the frame reached after that joint (0-based);
    its z-axis is the shaft centerline and its origin anchors the line.
    """
    joints: tuple
    q_min: np.ndarray
    q_max: np.ndarray
    base_pose: Pose = field(
        default_factory=lambda: Pose(UnitQuaternion.identity(), Quaternion()))
    shaft_joint_index: int = 6
    shaft_length: float = 0.20

    def __post_init__(self):
        self.joints = tuple(self.joints)
        if len(self.joints) != K.N_JOINTS:
            raise ValueError(f"expected {K.N_JOINTS} joints, got {len(self.joints)}")
        self.q_min = np.asarray(self.q_min, dtype=float).copy()
        self.q_max = np.asarray(self.q_max, dtype=float).copy()
        if self.q_min.shape != (9,) or self.q_max.shape != (9,):
            raise ValueError("q_min/q_max must be length-9")
        if not np.all(self.q_min < self.q_max):
            raise ValueError("q_min must be strictly below q_max")
        if not 0 <= self.shaft_joint_index <= 8:
            raise ValueError("shaft_joint_index must be in [0, 8]")
        if self.shaft_length <= 0:
            raise ValueError("shaft_length must be positive")
        # packed arrays for the compiled kernels
        self.dh = np.array([[j.a, j.alpha, j.d, j.theta_offset]
                            for j in self.joints])
        self.kind = np.array([0 if j.kind == REVOLUTE else 1
                              for j in self.joints], dtype=np.int64)
        self.base_r = np.array([self.base_pose.r.w, self.base_pose.r.x,
                                self.base_pose.r.y, self.base_pose.r.z])
        self.base_t = np.array([self.base_pose.t.x, self.base_pose.t.y,
                                self.base_pose.t.z])


def as_joint_config(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (9,):
        raise ValueError(f"joint configuration must be length-9, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint configuration must be finite")
    return q


def fk_frames(model: RobotModel, q) -> tuple[np.ndarray, np.ndarray]:
    """All 10 link frames as (rs, ts) arrays; row 0 is the base."""
    q = as_joint_config(q)
    return K._fk_frames(model.dh, model.kind, q, model.base_r, model.base_t)


def fk_pose(model: RobotModel, q) -> Pose:
    """End-effector pose by successive frame composition."""
    rs, ts = fk_frames(model, q)
    r = UnitQuaternion.normalized(*rs[9])
    return Pose(r, Quaternion.pure(ts[9]))


def translation_jacobian(model: RobotModel, q) -> np.ndarray:
    """3x9 Jacobian: d/dt vec3(t) = J qdot."""
    rs, ts = fk_frames(model, q)
    Jt, _ = K._jacobians(rs, ts, model.kind)
    return Jt


def rotation_jacobian(model: RobotModel, q) -> np.ndarray:
    """4x9 Jacobian: d/dt vec4(r) = J qdot, with rdot = 0.5 * omega * r."""
    rs, ts = fk_frames(model, q)
    _, Jr = K._jacobians(rs, ts, model.kind)
    return Jr


def shaft_line(model: RobotModel, q) -> ShaftLine:
    """Instrument shaft centerline in the base frame."""
    rs, ts = fk_frames(model, q)
    p, l = K._shaft(rs, ts, model.shaft_joint_index)
    return ShaftLine(Quaternion.pure(p), Quaternion.pure(l))


def line_point_sq_distance(line: ShaftLine, c) -> float:
    """Square distance between a line and a point, in m^2."""
    p = np.array([line.p.x, line.p.y, line.p.z])
    l = np.array([line.l.x, line.l.y, line.l.z])
    c = np.asarray(c, dtype=float)
    return float(K._line_sqdist(p, l, c))


def line_point_distance_jacobian(model: RobotModel, q, c) -> np.ndarray:
    """Row J_D (length 9) with Ddot = J_D qdot for the shaft-to-point
    square distance."""
    q = as_joint_config(q)
    c = np.asarray(c, dtype=float)
    rs, ts = fk_frames(model, q)
    _, Jd = K._es_row(rs, ts, model.kind, model.shaft_joint_index, c)
    return Jd
