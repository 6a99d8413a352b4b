"""Target sources: scripted trajectories standing in for the human operator
in batch runs, plus live and replay sources for the serve loop."""

from __future__ import annotations

import math

import numpy as np

from .quat import UnitQuaternion


class ConfigError(Exception):
    pass


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ConfigError("direction parameter must be nonzero")
    return v / n


def _orthonormal_to(l):
    # any unit vector perpendicular to l
    a = np.array([1.0, 0.0, 0.0])
    if abs(l @ a) > 0.9:
        a = np.array([0.0, 1.0, 0.0])
    u = np.cross(l, a)
    return u / np.linalg.norm(u)


class TargetSource:
    """Emits one target pose (t_d, r_d) per tick for one arm.

    reset() binds the source to the arm's start pose and entry sphere
    before the first tick; target(t) must be deterministic in t.
    """

    def reset(self, r0, t0, sphere=None):
        self.r0 = np.asarray(r0, dtype=float).copy()
        self.t0 = np.asarray(t0, dtype=float).copy()
        self.sphere = sphere
        self.shaft_dir = None

    def bind_shaft(self, direction):
        self.shaft_dir = _unit(direction)

    def target(self, t):
        tt, rr = self.sample(1, 1.0, t_start=t)
        return tt[0], rr[0]

    def sample(self, n, dt, t_start=0.0):
        """Target stream as arrays (t_d (n,3), r_d (n,4)) at the tick rate."""
        raise NotImplementedError


def _quat_mul_rows(a, b):
    """Row-wise Hamilton product of (n,4) stacks (or one side (4,))."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    w = a[:, 0] * b[:, 0] - a[:, 1] * b[:, 1] - a[:, 2] * b[:, 2] - a[:, 3] * b[:, 3]
    x = a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0] + a[:, 2] * b[:, 3] - a[:, 3] * b[:, 2]
    y = a[:, 0] * b[:, 2] - a[:, 1] * b[:, 3] + a[:, 2] * b[:, 0] + a[:, 3] * b[:, 1]
    z = a[:, 0] * b[:, 3] + a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1] + a[:, 3] * b[:, 0]
    return np.stack([w, x, y, z], axis=1)


class HoldSource(TargetSource):
    def sample(self, n, dt, t_start=0.0):
        return np.tile(self.t0, (n, 1)), np.tile(self.r0, (n, 1))


class StepSource(TargetSource):
    """Constant offset applied from t_start onward."""

    def __init__(self, offset=(0.005, 0.0, 0.0), t_start=0.0):
        self.offset = np.asarray(offset, dtype=float)
        self.t_start = float(t_start)

    def sample(self, n, dt, t_start=0.0):
        t = t_start + np.arange(n) * dt
        on = (t >= self.t_start)[:, None]
        tt = self.t0 + on * self.offset
        return tt, np.tile(self.r0, (n, 1))


class CircleSource(TargetSource):
    """Tip circles about its start point in the plane normal to the shaft,
    which is motion compatible with pivoting about the entry point."""

    def __init__(self, radius=0.003, freq=0.2):
        self.radius = float(radius)
        self.freq = float(freq)

    def sample(self, n, dt, t_start=0.0):
        l = self.shaft_dir if self.shaft_dir is not None else np.array([0.0, 0.0, 1.0])
        u = _orthonormal_to(l)
        v = np.cross(l, u)
        ph = 2.0 * math.pi * self.freq * (t_start + np.arange(n) * dt)
        # offset zero at t=0 so the stream starts at the current pose
        off = self.radius * ((np.cos(ph)[:, None] - 1.0) * u + np.sin(ph)[:, None] * v)
        return self.t0 + off, np.tile(self.r0, (n, 1))


class PivotSweepSource(TargetSource):
    """Wide lateral sweep of the tip at fixed commanded orientation.

    Tracking this rigidly would drag the whole shaft sideways far outside
    the entry sphere; with the constraint active the arm must pivot
    instead. Used as the adversarial safety trajectory.
    """

    def __init__(self, amplitude=0.03, period=4.0):
        self.amplitude = float(amplitude)
        self.period = float(period)

    def sample(self, n, dt, t_start=0.0):
        l = self.shaft_dir if self.shaft_dir is not None else np.array([0.0, 0.0, 1.0])
        u = _orthonormal_to(l)
        ph = 2.0 * math.pi * (t_start + np.arange(n) * dt) / self.period
        tt = self.t0 + self.amplitude * np.sin(ph)[:, None] * u
        return tt, np.tile(self.r0, (n, 1))


class SutureArcSource(TargetSource):
    """Small semicircular needle-pass arc with a synchronized wrist twist."""

    def __init__(self, radius=0.004, period=5.0, twist=0.8):
        self.radius = float(radius)
        self.period = float(period)
        self.twist = float(twist)

    def sample(self, n, dt, t_start=0.0):
        l = self.shaft_dir if self.shaft_dir is not None else np.array([0.0, 0.0, 1.0])
        u = _orthonormal_to(l)
        v = np.cross(l, u)
        t = t_start + np.arange(n) * dt
        ph = math.pi * (1.0 - np.cos(2.0 * math.pi * t / self.period)) / 2.0
        off = self.radius * ((np.cos(ph)[:, None] - 1.0) * u + np.sin(ph)[:, None] * v)
        half = 0.5 * self.twist * np.sin(ph)
        spin = np.concatenate([np.cos(half)[:, None],
                               np.sin(half)[:, None] * l], axis=1)
        return self.t0 + off, _quat_mul_rows(spin, self.r0)


class RandomSmoothSource(TargetSource):
    """Band-limited random wobble: a few sinusoids per axis plus a slow
    random rotation about a fixed axis. Deterministic per seed.

    Amplitudes are rescaled so the peak commanded speed stays within
    v_max / w_max, the scale of deliberate hand motion in fine
    teleoperation; without the cap the harmonics can stack into sweeps far
    faster than any operator would command.
    """

    def __init__(self, seed=0, t_amp=0.006, r_amp=0.08, harmonics=3,
                 f_max=0.8, v_max=0.025, w_max=0.15):
        rng = np.random.default_rng(int(seed))
        h = int(harmonics)
        self.amp = rng.uniform(-t_amp, t_amp, size=(h, 3))
        self.freq = rng.uniform(0.05, f_max, size=(h, 3))
        self.phase = rng.uniform(0.0, 2.0 * math.pi, size=(h, 3))
        peak = np.sum(np.abs(self.amp) * 2.0 * math.pi * self.freq, axis=0)
        scale = np.minimum(1.0, v_max / np.maximum(peak, 1e-12))
        self.amp = self.amp * scale
        axis = rng.standard_normal(3)
        self.rot_axis = axis / np.linalg.norm(axis)
        self.rot_amp = rng.uniform(0.0, r_amp)
        self.rot_freq = rng.uniform(0.05, f_max)
        self.rot_phase = rng.uniform(0.0, 2.0 * math.pi)
        rate = self.rot_amp * 2.0 * math.pi * self.rot_freq
        if rate > w_max:
            self.rot_amp *= w_max / rate

    def sample(self, n, dt, t_start=0.0):
        t = (t_start + np.arange(n) * dt)[:, None, None]
        ph = 2.0 * math.pi * self.freq * t + self.phase
        tt = self.t0 + np.sum(self.amp * (np.sin(ph) - np.sin(self.phase)), axis=1)
        ang = self.rot_amp * (np.sin(2.0 * math.pi * self.rot_freq * t[:, 0, 0]
                                     + self.rot_phase) - math.sin(self.rot_phase))
        half = 0.5 * ang
        spin = np.concatenate([np.cos(half)[:, None],
                               np.sin(half)[:, None] * self.rot_axis], axis=1)
        return tt, _quat_mul_rows(spin, self.r0)


class LiveSource(TargetSource):
    """Zero-order hold over externally pushed targets (the serve loop)."""

    def __init__(self):
        self.latest = None
        self.serial = 0

    def push(self, t_d, r_d):
        self.latest = (np.asarray(t_d, dtype=float).copy(),
                       np.asarray(r_d, dtype=float).copy())
        self.serial += 1

    def target(self, t):
        if self.latest is None:
            return self.t0, self.r0
        return self.latest

    def sample(self, n, dt, t_start=0.0):
        raise ConfigError("live sources cannot be sampled in batch mode")


class ReplaySource(TargetSource):
    """Replays a recorded command stream: entries (tick, t_d, r_d) applied
    from their tick onward (zero-order hold in between)."""

    def __init__(self, entries):
        self.entries = sorted(entries, key=lambda e: e[0])

    def sample(self, n, dt, t_start=0.0):
        tt = np.empty((n, 3))
        rr = np.empty((n, 4))
        cur_t, cur_r = self.t0, self.r0
        i = 0
        for k in range(n):
            while i < len(self.entries) and self.entries[i][0] <= k:
                cur_t = np.asarray(self.entries[i][1], dtype=float)
                cur_r = np.asarray(self.entries[i][2], dtype=float)
                i += 1
            tt[k] = cur_t
            rr[k] = cur_r
        return tt, rr


_SCRIPTED = {
    "hold": HoldSource,
    "step": StepSource,
    "circle-about-entry": CircleSource,
    "pivot-sweep": PivotSweepSource,
    "suture-arc": SutureArcSource,
    "random-smooth": RandomSmoothSource,
}


def scripted_trajectories(traj_id: str, params=None) -> TargetSource:
    """Build a scripted target source by id.

    Known ids: hold, step, circle-about-entry, pivot-sweep, suture-arc,
    random-smooth. Unknown ids raise ConfigError.
    """
    if traj_id not in _SCRIPTED:
        raise ConfigError(f"unknown trajectory id {traj_id!r}; "
                          f"known: {sorted(_SCRIPTED)}")
    return _SCRIPTED[traj_id](**(params or {}))
