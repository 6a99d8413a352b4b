"""Constrained differential-IK teleoperation engine.

A kinematic simulation of a two-arm teleoperated system: each 9-DoF arm
tracks operator targets through a per-tick QP (weighted translation and
rotation tracking with joint damping) subject to joint-limit and
entry-sphere constraints, with operator-side impedance feedback and full
telemetry.
"""

from .constraints import ConstraintRows, EntrySphere, entry_sphere_rows, joint_limit_rows
from .controller import ControllerParams, assemble_qp, control_step
from .kinematics import (JointSpec, Pose, RobotModel, ShaftLine, fk_pose,
                         line_point_distance_jacobian, line_point_sq_distance,
                         rotation_jacobian, shaft_line, translation_jacobian)
from .qp import QPProblem, VelocityCommand, kkt_residuals, solve_qp
from .quat import (Quaternion, UnitQuaternion, conj, quat_mul, rotate_point,
                   rotation_error_switching, vec3, vec4)
from .sim import ArmSetup, OperatorParams, SimState, TeleopSim, impedance_force, scale_target
from .telemetry import ArmTelemetry, TelemetryRecord, read_csv, write_csv
from .trajectories import ConfigError, TargetSource, scripted_trajectories

__version__ = "0.1.0"
__all__ = [
    "ArmSetup", "ArmTelemetry", "ConfigError", "ConstraintRows",
    "ControllerParams", "EntrySphere", "JointSpec", "OperatorParams", "Pose",
    "QPProblem", "Quaternion", "RobotModel", "ShaftLine", "SimState",
    "TargetSource", "TelemetryRecord", "TeleopSim", "UnitQuaternion",
    "VelocityCommand", "assemble_qp", "conj", "control_step",
    "entry_sphere_rows", "fk_pose", "impedance_force", "joint_limit_rows",
    "kkt_residuals", "line_point_distance_jacobian", "line_point_sq_distance",
    "quat_mul", "read_csv", "rotate_point", "rotation_error_switching",
    "rotation_jacobian", "scale_target", "scripted_trajectories",
    "shaft_line", "solve_qp", "translation_jacobian", "vec3", "vec4",
    "write_csv",
]
