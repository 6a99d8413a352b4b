"""Linear inequality rows W qdot <= w: joint limits and entry spheres.

The entry sphere models the incision point: the instrument shaft centerline
must stay within sqrt(D_safe) of the sphere center. The constraint is
velocity-level (Ddot <= eta_d (D_safe - D)), which makes the safe set
forward invariant and leaves qdot = 0 feasible whenever the state is safe.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .kinematics import RobotModel, as_joint_config, fk_frames

JOINT_LIMIT_TOL = 1e-9


@dataclass(frozen=True)
class EntrySphere:
    center: np.ndarray          # m, in the base frame
    d_safe: float               # maximum allowed SQUARE distance, m^2
    eta_d: float = 1.0          # 1/s, approach-speed gain

    def __post_init__(self):
        object.__setattr__(self, "center",
                           np.asarray(self.center, dtype=float).copy())
        if self.center.shape != (3,):
            raise ValueError("entry sphere center must be a 3-vector")
        if not self.d_safe > 0:
            raise ValueError("d_safe must be positive")
        if not self.eta_d > 0:
            raise ValueError("eta_d must be positive")


@dataclass
class ConstraintRows:
    W: np.ndarray
    w: np.ndarray
    limit_violation: bool = field(default=False)

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.w = np.asarray(self.w, dtype=float).ravel()
        if self.W.shape[0] != self.w.shape[0]:
            raise ValueError("W and w row counts differ")


def joint_limit_rows(q, model: RobotModel) -> ConstraintRows:
    """Rows [-I; I] qdot <= [q - q_min; q_max - q].

    At a lower limit the corresponding bound is 0, forcing qdot >= 0 there
    (and symmetrically at an upper limit). A configuration outside the
    limits beyond tolerance flags limit_violation but still produces the
    rows, whose negative bounds then drive the joint back inside.
    """
    q = as_joint_config(q)
    n = q.shape[0]
    W = np.vstack([-np.eye(n), np.eye(n)])
    w = np.concatenate([q - model.q_min, model.q_max - q])
    violated = bool(np.any(w < -JOINT_LIMIT_TOL))
    if violated:
        warnings.warn("joint configuration outside limits; constraint rows "
                      "will command a restoring velocity", RuntimeWarning)
    return ConstraintRows(W, w, limit_violation=violated)


def entry_sphere_rows(model: RobotModel, q, sphere: EntrySphere) -> ConstraintRows:
    """Single row J_D qdot <= eta_d (D_safe - D_ES).

    When the shaft already sits outside the sphere the bound goes negative,
    which commands motion that reduces the distance; discrete-time
    overshoot self-corrects this way instead of erroring.
    """
    q = as_joint_config(q)
    rs, ts = fk_frames(model, q)
    D, Jd = K._es_row(rs, ts, model.kind, model.shaft_joint_index, sphere.center)
    w = sphere.eta_d * (sphere.d_safe - D)
    return ConstraintRows(Jd.reshape(1, -1), np.array([w]))


def stack_rows(*rows: ConstraintRows) -> ConstraintRows:
    parts = [r for r in rows if r.W.shape[0] > 0]
    if not parts:
        return ConstraintRows(np.zeros((0, 9)), np.zeros(0))
    return ConstraintRows(np.vstack([r.W for r in parts]),
                          np.concatenate([r.w for r in parts]),
                          limit_violation=any(r.limit_violation for r in parts))
