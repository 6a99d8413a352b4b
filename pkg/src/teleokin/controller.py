"""Per-tick joint-velocity controller.

Each tick solves

    min   alpha ||Jt qd + eta vec3(terr)||^2
        + (1-alpha) ||Jr qd + eta vec4(rerr)||^2
        + ||Lambda qd||^2
    s.t.  joint-limit rows and entry-sphere rows hold,

with Lambda = diag(lam_r I6, lam_f I3) balancing manipulator joints against
instrument joints, terr = t - t_d, and rerr the switching rotational error.
A small ridge keeps the problem strictly convex even when lam_f = 0, so the
minimizer is unique.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .constraints import EntrySphere, ConstraintRows, entry_sphere_rows, joint_limit_rows, stack_rows
from .kinematics import Pose, RobotModel, as_joint_config
from .qp import QPProblem, VelocityCommand, solve_qp, FEAS_TOL, MAX_ITER
from .quat import vec3, vec4


@dataclass(frozen=True)
class ControllerParams:
    alpha: float = 0.9999       # translation vs rotation soft priority
    eta: float = 120.0          # 1/s, task error gain
    lam_r: float = 0.01         # manipulator joint damping
    lam_f: float = 0.0          # instrument joint damping
    eps_reg: float = 1e-10      # strict-convexity ridge

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.lam_r < 0 or self.lam_f < 0:
            raise ValueError("damping factors must be nonnegative")
        if not 1e-12 <= self.eps_reg <= 1e-6:
            raise ValueError("eps_reg out of range [1e-12, 1e-6]")


def assemble_qp(model: RobotModel, q, target: Pose,
                cparams: ControllerParams, rows: ConstraintRows) -> QPProblem:
    """Build the tracking QP for one arm at configuration q."""
    q = as_joint_config(q)
    rs, ts = K._fk_frames(model.dh, model.kind, q, model.base_r, model.base_t)
    Jt, Jr = K._jacobians(rs, ts, model.kind)
    if not (np.all(np.isfinite(Jt)) and np.all(np.isfinite(Jr))):
        raise ValueError("non-finite Jacobians")
    terr = ts[9] - vec3(target.t)
    # same switching-error arithmetic as the fused kernel; the FK rotation
    # stays unit to machine precision, so no renormalization here
    rerr = K._switching_error(rs[9], vec4(target.r))
    H, g = K._assemble_hg(Jt, Jr, terr, rerr, cparams.alpha, cparams.eta,
                          cparams.lam_r, cparams.lam_f, cparams.eps_reg)
    const = (cparams.alpha * cparams.eta ** 2 * float(terr @ terr)
             + (1.0 - cparams.alpha) * cparams.eta ** 2 * float(rerr @ rerr))
    return QPProblem(H=H, g=g, W=rows.W, w=rows.w, obj_const=const)


def control_step(model: RobotModel, q, target: Pose,
                 cparams: ControllerParams, spheres=(),
                 joint_limits: bool = True, warm_start=None) -> VelocityCommand:
    """joint_limit_rows + entry_sphere_rows -> assemble_qp -> solve_qp."""
    q = as_joint_config(q)
    parts = []
    if joint_limits:
        parts.append(joint_limit_rows(q, model))
    for s in spheres:
        parts.append(entry_sphere_rows(model, q, s))
    rows = stack_rows(*parts)
    problem = assemble_qp(model, q, target, cparams, rows)
    return solve_qp(problem, warm_start=warm_start)


def pack_spheres(spheres) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entry spheres as arrays for the compiled kernels."""
    spheres = tuple(spheres)
    if not spheres:
        return np.zeros((0, 3)), np.zeros(0), np.zeros(0)
    c = np.stack([s.center for s in spheres])
    dsafe = np.array([s.d_safe for s in spheres])
    etad = np.array([s.eta_d for s in spheres])
    return c, dsafe, etad


def control_step_fused(model: RobotModel, q, prev_r, tgt_t, tgt_r,
                       cparams: ControllerParams, spheres=(),
                       joint_limits=True, es_on=True, ws=None,
                       feas_tol=FEAS_TOL, max_iter=MAX_ITER):
    """Raw-array control step through the fused kernel.

    Same arithmetic as control_step; also returns telemetry intermediates.
    Used by the simulator and by tests that pin the two paths together.
    """
    es_c, es_dsafe, es_etad = pack_spheres(spheres)
    m = (18 if joint_limits else 0) + (es_c.shape[0] if es_on else 0)
    if ws is None:
        ws = np.zeros(m, dtype=bool)
    return K._control_step(
        model.dh, model.kind, model.q_min, model.q_max,
        model.base_r, model.base_t, model.shaft_joint_index,
        np.asarray(q, dtype=float), np.asarray(prev_r, dtype=float),
        np.asarray(tgt_t, dtype=float), np.asarray(tgt_r, dtype=float),
        cparams.alpha, cparams.eta, cparams.lam_r, cparams.lam_f,
        cparams.eps_reg, joint_limits, es_on, es_c, es_dsafe, es_etad,
        ws, feas_tol, max_iter)
