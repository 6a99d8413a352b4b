"""Telemetry records and the versioned CSV format."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CSV_VERSION = "teleokin-telemetry-csv v1"

COLUMNS = (
    ["time", "arm"]
    + [f"q{i}" for i in range(9)]
    + [f"qd{i}" for i in range(9)]
    + ["terr_x", "terr_y", "terr_z", "terr_norm", "rerr_norm",
       "d_es_sq", "d_es", "w_es", "n_active", "status",
       "force_x", "force_y", "force_z"]
)


@dataclass
class TelemetryRecord:
    """One tick of one arm: post-step state plus this tick's command info."""
    time: float
    arm: int
    q: np.ndarray
    qd: np.ndarray
    t_err: np.ndarray
    t_err_norm: float
    r_err_norm: float
    d_es_sq: float
    d_es: float
    w_es: float
    n_active: int
    status: str
    force: np.ndarray

    def to_row(self):
        return ([self.time, self.arm] + list(self.q) + list(self.qd)
                + list(self.t_err) + [self.t_err_norm, self.r_err_norm,
                self.d_es_sq, self.d_es, self.w_es, self.n_active,
                self.status] + list(self.force))

    def to_frame(self) -> dict:
        return {
            "type": "telemetry",
            "time": float(self.time),
            "arm": int(self.arm),
            "q": [float(v) for v in self.q],
            "qd": [float(v) for v in self.qd],
            "t_err": [float(v) for v in self.t_err],
            "t_err_norm": float(self.t_err_norm),
            "r_err_norm": float(self.r_err_norm),
            "d_es_sq": float(self.d_es_sq),
            "d_es": float(self.d_es),
            "w_es": float(self.w_es),
            "n_active": int(self.n_active),
            "status": self.status,
            "force": [float(v) for v in self.force],
        }


@dataclass
class ArmTelemetry:
    """Whole-run telemetry for one arm as flat arrays (fused batch path)."""
    arm: int
    time: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    t_err: np.ndarray
    t_err_norm: np.ndarray
    r_err_norm: np.ndarray
    d_es_sq: np.ndarray
    w_es: np.ndarray
    n_active: np.ndarray
    status: np.ndarray
    force: np.ndarray

    def record(self, k) -> TelemetryRecord:
        d = float(self.d_es_sq[k])
        return TelemetryRecord(
            time=float(self.time[k]), arm=self.arm,
            q=self.q[k], qd=self.qd[k], t_err=self.t_err[k],
            t_err_norm=float(self.t_err_norm[k]),
            r_err_norm=float(self.r_err_norm[k]),
            d_es_sq=d, d_es=math.sqrt(d) if d == d and d >= 0.0 else d,
            w_es=float(self.w_es[k]), n_active=int(self.n_active[k]),
            status=status_name(int(self.status[k])), force=self.force[k])

    def __len__(self):
        return self.time.shape[0]


def status_name(code: int) -> str:
    return {0: "optimal", 1: "max_iter", 2: "infeasible_input"}[code]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    # shortest round-trip decimal, at least 9 significant digits implied
    return repr(float(v))


def write_csv(path, per_arm: list, mode="w"):
    """Interleaved CSV, one row per tick per arm, fixed column order."""
    n = min(len(a) for a in per_arm) if per_arm else 0
    with open(path, mode, newline="") as f:
        f.write(f"# {CSV_VERSION}\n")
        f.write(",".join(COLUMNS) + "\n")
        for k in range(n):
            for a in per_arm:
                rec = a.record(k) if isinstance(a, ArmTelemetry) else a[k]
                f.write(",".join(_fmt(v) for v in rec.to_row()) + "\n")


def write_csv_records(path, records):
    """CSV from an already interleaved record list (live sessions)."""
    with open(path, "w", newline="") as f:
        f.write(f"# {CSV_VERSION}\n")
        f.write(",".join(COLUMNS) + "\n")
        for rec in records:
            f.write(",".join(_fmt(v) for v in rec.to_row()) + "\n")


def read_csv(path):
    """Parse a telemetry CSV back into a list of dicts (test helper)."""
    out = []
    with open(path) as f:
        header = f.readline().strip()
        if not header.startswith("#"):
            raise ValueError("missing version comment line")
        cols = f.readline().strip().split(",")
        for line in f:
            vals = line.strip().split(",")
            row = {}
            for c, v in zip(cols, vals):
                if c == "status":
                    row[c] = v
                elif c in ("arm", "n_active"):
                    row[c] = int(v)
                else:
                    row[c] = float(v)
            out.append(row)
    return out
