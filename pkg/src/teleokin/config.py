"""Run configuration: YAML schema, defaults, robot model files, and the
factory that turns a config into a ready TeleopSim."""

from __future__ import annotations

import copy
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import _kernels as K
from .constraints import EntrySphere
from .controller import ControllerParams
from .kinematics import JointSpec, Pose, RobotModel
from .quat import Quaternion, UnitQuaternion
from .sim import ArmSetup, OperatorParams, TeleopSim
from .trajectories import ConfigError, ReplaySource, scripted_trajectories

# default control parameters (see configs/default.yaml for the annotated copy)
DEFAULTS = {
    "dt": 1e-3,
    "duration": 10.0,
    "seed": 0,
    "decimation": 10,
    "controller": {"alpha": 0.9999, "eta": 120.0, "lambda_r": 0.01,
                   "lambda_f": 0.0, "eps_reg": 1e-10},
    "operator": {"eta_f": 100.0, "eta_v": 10.0, "motion_scaling": 1.0},
    "entry_sphere": {"center": "auto", "auto_offset": 0.10,
                     "d_safe": 0.005 ** 2, "eta_d": 1.0},
}


@dataclass
class ArmConfig:
    model_path: str
    q0: np.ndarray
    base_r: np.ndarray
    base_t: np.ndarray
    sphere: dict


@dataclass
class RunConfig:
    path: str
    dt: float
    duration: float
    seed: int
    decimation: int
    bind: str
    out: str
    command_log: str
    live: bool
    controller: ControllerParams
    operator: OperatorParams
    trajectories: list           # one spec dict per arm
    arms: list                   # ArmConfig per arm
    raw: dict = field(default_factory=dict)


def _merge(base, override):
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_robot_model(path, base_r=None, base_t=None) -> RobotModel:
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load robot model {path}: {e}") from e
    if not isinstance(data, dict) or "joints" not in data:
        raise ConfigError(f"robot model {path} missing 'joints'")
    try:
        joints = [JointSpec(a=float(j.get("a", 0.0)),
                            alpha=float(j.get("alpha", 0.0)),
                            d=float(j.get("d", 0.0)),
                            theta_offset=float(j.get("theta_offset", 0.0)),
                            kind=j.get("kind", "revolute"))
                  for j in data["joints"]]
        r = np.asarray(base_r if base_r is not None
                       else data.get("base_r", [1.0, 0.0, 0.0, 0.0]), dtype=float)
        t = np.asarray(base_t if base_t is not None
                       else data.get("base_t", [0.0, 0.0, 0.0]), dtype=float)
        return RobotModel(
            joints=joints,
            q_min=np.asarray(data["q_min"], dtype=float),
            q_max=np.asarray(data["q_max"], dtype=float),
            base_pose=Pose(UnitQuaternion(*r), Quaternion.pure(t)),
            shaft_joint_index=int(data.get("shaft_joint_index", 6)),
            shaft_length=float(data.get("shaft_length", 0.20)))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid robot model {path}: {e}") from e


def load_config(path) -> RunConfig:
    """Parse and validate a run configuration file.

    Unset fields fall back to the shipped defaults. Raises ConfigError on
    any parse or validation problem.
    """
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} is not a mapping")
    base_dir = os.path.dirname(os.path.abspath(path))
    merged = _merge(DEFAULTS, data)
    try:
        c = merged["controller"]
        cparams = ControllerParams(alpha=float(c["alpha"]), eta=float(c["eta"]),
                                   lam_r=float(c["lambda_r"]),
                                   lam_f=float(c["lambda_f"]),
                                   eps_reg=float(c["eps_reg"]))
        o = merged["operator"]
        os_rot = np.asarray(o.get("os_rotation", [1.0, 0.0, 0.0, 0.0]), dtype=float)
        oparams = OperatorParams(eta_f=float(o["eta_f"]), eta_v=float(o["eta_v"]),
                                 motion_scaling=float(o["motion_scaling"]),
                                 os_rotation=os_rot)
        arms_spec = merged.get("arms")
        if not arms_spec:
            raise ConfigError("config must define at least one arm")
        arms = []
        for spec in arms_spec:
            model_path = spec["model"]
            if not os.path.isabs(model_path):
                model_path = os.path.join(base_dir, model_path)
            if not os.path.exists(model_path):
                raise ConfigError(f"robot model file not found: {model_path}")
            sphere = _merge(merged["entry_sphere"], spec.get("entry_sphere", {}))
            base = spec.get("base", {})
            arms.append(ArmConfig(
                model_path=model_path,
                q0=np.asarray(spec["q0"], dtype=float),
                base_r=np.asarray(base.get("r", [1.0, 0.0, 0.0, 0.0]), dtype=float),
                base_t=np.asarray(base.get("t", [0.0, 0.0, 0.0]), dtype=float),
                sphere=sphere))
        traj = merged.get("trajectory", {"id": "hold", "params": {}})
        trajectories = merged.get("trajectories") or [traj] * len(arms)
        if len(trajectories) != len(arms):
            raise ConfigError("trajectories list must match the number of arms")
        dt = float(merged["dt"])
        duration = float(merged["duration"])
        if dt <= 0 or duration < 0:
            raise ConfigError("dt must be positive and duration nonnegative")
        return RunConfig(
            path=os.path.abspath(path), dt=dt, duration=duration,
            seed=int(merged["seed"]), decimation=int(merged["decimation"]),
            bind=str(merged.get("bind", "127.0.0.1:8765")),
            out=str(merged.get("out", "telemetry.csv")),
            command_log=str(merged.get("command_log", "commands.jsonl")),
            live=bool(merged.get("live", False)),
            controller=cparams, operator=oparams,
            trajectories=[dict(t) for t in trajectories],
            arms=arms, raw=merged)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid config {path}: {e}") from e


def _auto_sphere_center(model: RobotModel, q0, offset: float) -> np.ndarray:
    rs, ts = K._fk_frames(model.dh, model.kind, np.asarray(q0, dtype=float),
                          model.base_r, model.base_t)
    p, l = K._shaft(rs, ts, model.shaft_joint_index)
    return p - offset * l


def make_sphere(model: RobotModel, q0, spec: dict) -> EntrySphere:
    center = spec.get("center", "auto")
    if isinstance(center, str):
        if center != "auto":
            raise ConfigError(f"unknown entry sphere center {center!r}")
        center = _auto_sphere_center(model, q0, float(spec.get("auto_offset", 0.10)))
    return EntrySphere(center=np.asarray(center, dtype=float),
                       d_safe=float(spec["d_safe"]),
                       eta_d=float(spec["eta_d"]))


def make_source(traj_spec: dict, seed=0, arm_index=0):
    traj_id = traj_spec.get("id", "hold")
    params = dict(traj_spec.get("params", {}))
    if traj_id == "replay":
        path = params.get("path")
        if not path:
            raise ConfigError("replay trajectory requires params.path")
        from .server import read_command_log
        return ReplaySource(read_command_log(path, arm=arm_index + 1))
    if traj_id == "random-smooth" and "seed" not in params:
        # arms get decorrelated but reproducible streams
        params["seed"] = seed * 1000 + arm_index
    return scripted_trajectories(traj_id, params)


def build_sim(config: RunConfig, sources=None, joint_limits=True,
              entry_spheres=True) -> TeleopSim:
    """Instantiate the simulator described by a RunConfig.

    sources overrides the per-arm target sources (used by the serve loop
    to install live sources and by tests).
    """
    setups = []
    for i, ac in enumerate(config.arms):
        model = load_robot_model(ac.model_path, base_r=ac.base_r, base_t=ac.base_t)
        if np.any(ac.q0 < model.q_min) or np.any(ac.q0 > model.q_max):
            raise ConfigError(f"arm {i + 1} q0 outside joint limits")
        sphere = make_sphere(model, ac.q0, ac.sphere)
        if sources is not None:
            source = sources[i]
        else:
            source = make_source(config.trajectories[i], seed=config.seed,
                                 arm_index=i)
        setups.append(ArmSetup(model=model, source=source,
                               spheres=(sphere,), q0=ac.q0))
    return TeleopSim(setups, cparams=config.controller,
                     oparams=config.operator, dt=config.dt,
                     joint_limits=joint_limits, entry_spheres=entry_spheres)
