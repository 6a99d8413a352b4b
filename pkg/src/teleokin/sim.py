"""Closed-loop teleoperation simulation.

Both arms advance with explicit Euler at a fixed tick: read target, solve
the constrained tracking QP, integrate, log. Operator-side force feedback
(stiffness/viscosity on the task error) is computed and logged but the
operator device itself is not simulated; scripted or live sources stand in
for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .constraints import EntrySphere
from .controller import ControllerParams, pack_spheres
from .kinematics import RobotModel, as_joint_config
from .qp import FEAS_TOL, MAX_ITER
from .quat import Quaternion, UnitQuaternion, vec3
from .telemetry import ArmTelemetry, TelemetryRecord, status_name
from .trajectories import TargetSource

CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class OperatorParams:
    eta_f: float = 100.0        # stiffness, force per meter of task error
    eta_v: float = 10.0         # viscosity on the operator-side velocity
    motion_scaling: float = 1.0  # PS motion per OS motion
    os_rotation: np.ndarray = field(
        default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        if not (self.eta_f > 0 and self.eta_v > 0):
            raise ValueError("stiffness and viscosity must be positive")
        if not self.motion_scaling > 0:
            raise ValueError("motion scaling must be positive")
        r = np.asarray(self.os_rotation, dtype=float)
        if r.shape != (4,) or abs(np.linalg.norm(r) - 1.0) > 1e-9:
            raise ValueError("os_rotation must be a unit quaternion (w,x,y,z)")
        object.__setattr__(self, "os_rotation", r.copy())


def impedance_force(t_err_os: Quaternion, tdot_os: Quaternion,
                    oparams: OperatorParams) -> Quaternion:
    """Operator-side force: -eta_f * t_err_os - eta_v * tdot_os.

    Lets the operator feel task-space directions the robot struggles to
    move in. Pure quaternion in, pure quaternion out.
    """
    if not (t_err_os.is_pure() and tdot_os.is_pure()):
        raise ValueError("impedance inputs must be pure quaternions")
    e = vec3(t_err_os)
    v = vec3(tdot_os)
    return Quaternion.pure(-oparams.eta_f * e - oparams.eta_v * v)


def scale_target(raw_os_translation, ms, anchor_ps, anchor_os) -> np.ndarray:
    """Map an operator-side translation to a patient-side target:
    t_d = anchor_ps + ms * (raw - anchor_os)."""
    if not ms > 0:
        raise ValueError("motion scaling must be positive")
    raw = np.asarray(raw_os_translation, dtype=float)
    return np.asarray(anchor_ps, dtype=float) + ms * (raw - np.asarray(anchor_os, dtype=float))


@dataclass
class ArmSetup:
    model: RobotModel
    source: TargetSource
    spheres: tuple = ()
    q0: np.ndarray = field(default_factory=lambda: np.zeros(9))


class _ArmState:
    def __init__(self, setup: ArmSetup, joint_limits, entry_spheres):
        self.model = setup.model
        self.source = setup.source
        self.spheres = tuple(setup.spheres)
        self.q = as_joint_config(setup.q0).copy()
        rs, ts = K._fk_frames(self.model.dh, self.model.kind, self.q,
                              self.model.base_r, self.model.base_t)
        self.prev_r = rs[9].copy()
        self.t = ts[9].copy()
        self.qdot = np.zeros(9)
        p, l = K._shaft(rs, ts, self.model.shaft_joint_index)
        self.source.reset(self.prev_r, self.t,
                          self.spheres[0] if self.spheres else None)
        self.source.bind_shaft(l)
        self.es_c, self.es_dsafe, self.es_etad = pack_spheres(self.spheres)
        m = (18 if joint_limits else 0) + (len(self.spheres) if entry_spheres else 0)
        self.ws = np.zeros(m, dtype=bool)
        self.prev_tgt = None
        if self.spheres and entry_spheres:
            self.d_es = float(K._line_sqdist(p, l, self.es_c[0]))
        else:
            self.d_es = float("nan")


@dataclass
class SimState:
    """Snapshot of the simulation: per-arm joint state and clock."""
    q: list
    qdot: list
    pose_t: list
    d_es: list
    clock: float
    dt: float


class TeleopSim:
    def __init__(self, arms, cparams: ControllerParams = None,
                 oparams: OperatorParams = None, dt: float = 1e-3,
                 joint_limits: bool = True, entry_spheres: bool = True,
                 feas_tol: float = FEAS_TOL, max_iter: int = MAX_ITER):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.cparams = cparams or ControllerParams()
        self.oparams = oparams or OperatorParams()
        self.dt = float(dt)
        self.joint_limits = bool(joint_limits)
        self.entry_spheres = bool(entry_spheres)
        self.feas_tol = feas_tol
        self.max_iter = max_iter
        self.clock = 0.0
        self.tick_index = 0
        self.arms = [_ArmState(a, self.joint_limits, self.entry_spheres)
                     for a in arms]
        self._os_rot_mat = UnitQuaternion(*self.oparams.os_rotation).to_matrix()

    @property
    def state(self) -> SimState:
        return SimState(q=[a.q.copy() for a in self.arms],
                        qdot=[a.qdot.copy() for a in self.arms],
                        pose_t=[a.t.copy() for a in self.arms],
                        d_es=[a.d_es for a in self.arms],
                        clock=self.clock, dt=self.dt)

    def _force(self, arm: _ArmState, t_err, tgt_t):
        if arm.prev_tgt is None:
            tdot_os = np.zeros(3)
        else:
            tdot_os = (tgt_t - arm.prev_tgt) / (self.oparams.motion_scaling * self.dt)
        t_err_os = self._os_rot_mat @ t_err
        return -self.oparams.eta_f * t_err_os - self.oparams.eta_v * tdot_os

    def step(self):
        """Advance one tick; returns one TelemetryRecord per arm.

        A solver failure on an arm keeps that arm still for the tick and
        surfaces in the record's status.
        """
        cp = self.cparams
        records = []
        for i, arm in enumerate(self.arms):
            tgt_t, tgt_r = arm.source.target(self.clock)
            tgt_t = np.asarray(tgt_t, dtype=float)
            tgt_r = np.asarray(tgt_r, dtype=float)
            (qdot, status, nact, ws, d_es, w_es, t_err, r_err, r_post,
             t_post, clamp) = K._tick(
                arm.model.dh, arm.model.kind, arm.model.q_min, arm.model.q_max,
                arm.model.base_r, arm.model.base_t, arm.model.shaft_joint_index,
                arm.q, arm.prev_r, tgt_t, tgt_r,
                cp.alpha, cp.eta, cp.lam_r, cp.lam_f, cp.eps_reg,
                self.joint_limits, self.entry_spheres,
                arm.es_c, arm.es_dsafe, arm.es_etad,
                arm.ws, self.feas_tol, self.max_iter, self.dt)
            if self.joint_limits and status == K.STATUS_OPTIMAL and clamp > CLAMP_TOL:
                raise AssertionError(
                    f"joint clamp of {clamp:.3e} rad despite satisfied limit rows")
            arm.prev_r = r_post
            arm.t = t_post
            arm.qdot = qdot
            arm.ws = ws
            arm.d_es = float(d_es)
            force = self._force(arm, t_err, tgt_t)
            arm.prev_tgt = tgt_t.copy()
            d = float(d_es)
            records.append(TelemetryRecord(
                time=(self.tick_index + 1) * self.dt, arm=i + 1,
                q=arm.q.copy(), qd=qdot.copy(), t_err=t_err.copy(),
                t_err_norm=float(np.linalg.norm(t_err)),
                r_err_norm=float(np.linalg.norm(r_err)),
                d_es_sq=d, d_es=math.sqrt(d) if d == d and d >= 0.0 else d,
                w_es=float(w_es), n_active=int(nact),
                status=status_name(int(status)), force=force))
        self.tick_index += 1
        self.clock = self.tick_index * self.dt
        return records

    def run(self, n_ticks: int):
        """Fused batch run over scripted sources; bit-identical to calling
        step() n_ticks times. Returns a list of ArmTelemetry."""
        cp = self.cparams
        out = []
        t0 = self.clock
        k0 = self.tick_index
        for i, arm in enumerate(self.arms):
            tgt_t, tgt_r = arm.source.sample(n_ticks, self.dt, t_start=t0)
            n = n_ticks
            o_q = np.empty((n, 9))
            o_qd = np.empty((n, 9))
            o_terr = np.empty((n, 3))
            o_tn = np.empty(n)
            o_rn = np.empty(n)
            o_des = np.empty(n)
            o_wes = np.empty(n)
            o_nact = np.empty(n, dtype=np.int64)
            o_status = np.empty(n, dtype=np.int64)
            q_fin, r_fin, ws_fin, clamp_max = K._simulate_arm(
                arm.model.dh, arm.model.kind, arm.model.q_min, arm.model.q_max,
                arm.model.base_r, arm.model.base_t, arm.model.shaft_joint_index,
                arm.q, tgt_t, tgt_r,
                cp.alpha, cp.eta, cp.lam_r, cp.lam_f, cp.eps_reg,
                self.joint_limits, self.entry_spheres,
                arm.es_c, arm.es_dsafe, arm.es_etad,
                self.feas_tol, self.max_iter, self.dt,
                o_q, o_qd, o_terr, o_tn, o_rn, o_des, o_wes, o_nact, o_status)
            if (self.joint_limits and clamp_max > CLAMP_TOL
                    and np.all(o_status == K.STATUS_OPTIMAL)):
                raise AssertionError(
                    f"joint clamp of {clamp_max:.3e} rad despite satisfied limit rows")
            arm.q = q_fin
            arm.prev_r = r_fin
            arm.ws = ws_fin
            arm.qdot = o_qd[-1].copy() if n else arm.qdot
            arm.d_es = float(o_des[-1]) if n else arm.d_es
            # operator force, vectorized: same arithmetic as the step path
            if arm.prev_tgt is None:
                prev0 = tgt_t[0]
            else:
                prev0 = arm.prev_tgt
            prev = np.vstack([prev0, tgt_t[:-1]])
            tdot_os = (tgt_t - prev) / (self.oparams.motion_scaling * self.dt)
            terr_os = o_terr @ self._os_rot_mat.T
            force = -self.oparams.eta_f * terr_os - self.oparams.eta_v * tdot_os
            arm.prev_tgt = tgt_t[-1].copy() if n else arm.prev_tgt
            out.append(ArmTelemetry(
                arm=i + 1, time=(k0 + 1 + np.arange(n)) * self.dt,
                q=o_q, qd=o_qd, t_err=o_terr, t_err_norm=o_tn,
                r_err_norm=o_rn, d_es_sq=o_des, w_es=o_wes,
                n_active=o_nact, status=o_status, force=force))
        self.tick_index = k0 + n_ticks
        self.clock = self.tick_index * self.dt
        return out
