"""Dense QP problems and the in-repo active-set solver wrapper.

The problems are tiny (9 variables, at most a few dozen rows), solved at
every control tick, so the solver is a specialized dense active-set method
rather than a general-purpose dependency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K

FEAS_TOL = 1e-12
MAX_ITER = 200

_STATUS_NAMES = {
    K.STATUS_OPTIMAL: "optimal",
    K.STATUS_MAX_ITER: "max_iter",
    K.STATUS_INFEASIBLE: "infeasible_input",
}


@dataclass
class QPProblem:
    """min 0.5 qd' H qd + g' qd  s.t.  W qd <= w.

    obj_const carries the constant term dropped from the quadratic form so
    that objective values remain comparable to the original squared-norm
    tracking costs.
    """
    H: np.ndarray
    g: np.ndarray
    W: np.ndarray
    w: np.ndarray
    obj_const: float = 0.0

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float).ravel()
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.w = np.asarray(self.w, dtype=float).ravel()
        n = self.g.shape[0]
        if self.H.shape != (n, n):
            raise ValueError("H/g size mismatch")
        if self.W.shape[1] != n and self.W.shape[0] > 0:
            raise ValueError("W column count mismatch")
        if self.W.shape[0] != self.w.shape[0]:
            raise ValueError("W/w row mismatch")
        if not np.allclose(self.H, self.H.T, atol=1e-12):
            raise ValueError("H must be symmetric")

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.g @ x + self.obj_const)


@dataclass
class VelocityCommand:
    qdot: np.ndarray
    solver_status: str
    active_set: tuple = ()
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ok(self) -> bool:
        return self.solver_status == "optimal"


def solve_qp(problem: QPProblem, warm_start=None,
             feas_tol: float = FEAS_TOL, max_iter: int = MAX_ITER) -> VelocityCommand:
    """Solve the QP with the active-set kernel.

    warm_start is a working set (boolean mask or row indices) from a nearby
    previous solve; rows not active at the start point are dropped, so the
    result matches a cold solve to solver tolerance.
    """
    m = problem.W.shape[0]
    ws0 = np.zeros(m, dtype=bool)
    if warm_start is not None:
        warm = np.asarray(warm_start)
        if warm.dtype == bool:
            ws0 = warm.copy()
        else:
            ws0[np.asarray(warm, dtype=int)] = True
    if not (np.all(np.isfinite(problem.H)) and np.all(np.isfinite(problem.g))
            and np.all(np.isfinite(problem.W)) and np.all(np.isfinite(problem.w))):
        raise ValueError("QP data must be finite")
    x, mu, status, ws = K._solve_qp(problem.H, problem.g, problem.W,
                                    problem.w, ws0, feas_tol, max_iter)
    return VelocityCommand(qdot=x,
                           solver_status=_STATUS_NAMES[int(status)],
                           active_set=tuple(np.flatnonzero(ws)),
                           multipliers=mu)


def kkt_residuals(problem: QPProblem, cmd: VelocityCommand) -> dict:
    """Stationarity, primal feasibility and complementarity residuals."""
    x, mu = cmd.qdot, cmd.multipliers
    stat = problem.H @ x + problem.g
    if problem.W.shape[0]:
        stat = stat + problem.W.T @ mu
        slack = problem.W @ x - problem.w
        primal = float(np.max(slack)) if slack.size else 0.0
        comp = float(np.max(np.abs(mu * slack))) if slack.size else 0.0
    else:
        primal, comp = 0.0, 0.0
    return {
        "stationarity": float(np.linalg.norm(stat)),
        "primal": primal,
        "complementarity": comp,
        "dual": float(-min(0.0, mu.min())) if mu.size else 0.0,
    }
