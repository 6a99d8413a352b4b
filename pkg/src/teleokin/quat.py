"""Quaternion algebra for pose tracking control.

Conventions used throughout the package:
  * scalar-first component order (w, x, y, z)
  * translations are pure quaternions (w = 0)
  * rotations are unit quaternions r = cos(phi/2) + v sin(phi/2)
"""

from __future__ import annotations

import math

import numpy as np

UNIT_TOL = 1e-9        # inputs further than this from unit norm are rejected
PURE_TOL = 1e-12       # |w| above this disqualifies a "pure" quaternion


class Quaternion:
    """Immutable quaternion w + x*i + y*j + z*k."""

    __slots__ = ("w", "x", "y", "z")

    def __init__(self, w=0.0, x=0.0, y=0.0, z=0.0):
        object.__setattr__(self, "w", float(w))
        object.__setattr__(self, "x", float(x))
        object.__setattr__(self, "y", float(y))
        object.__setattr__(self, "z", float(z))

    def __setattr__(self, name, value):
        raise AttributeError("Quaternion is immutable")

    @classmethod
    def pure(cls, vec) -> "Quaternion":
        """Translation-style quaternion from a 3-vector (w = 0 exactly)."""
        v = np.asarray(vec, dtype=float)
        if v.shape != (3,):
            raise ValueError(f"expected 3-vector, got shape {v.shape}")
        return cls(0.0, v[0], v[1], v[2])

    @classmethod
    def from_wxyz(cls, arr) -> "Quaternion":
        a = np.asarray(arr, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"expected 4-vector, got shape {a.shape}")
        return cls(a[0], a[1], a[2], a[3])

    def wxyz(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x
                         + self.y * self.y + self.z * self.z)

    def is_pure(self, tol=PURE_TOL) -> bool:
        return abs(self.w) <= tol

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        s = float(other)
        return Quaternion(s * self.w, s * self.x, s * self.y, s * self.z)

    def __rmul__(self, other):
        s = float(other)
        return Quaternion(s * self.w, s * self.x, s * self.y, s * self.z)

    def __add__(self, other):
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __eq__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return (self.w == other.w and self.x == other.x
                and self.y == other.y and self.z == other.z)

    def __hash__(self):
        return hash((self.w, self.x, self.y, self.z))

    def __repr__(self):
        return (f"{type(self).__name__}({self.w!r}, {self.x!r}, "
                f"{self.y!r}, {self.z!r})")


class UnitQuaternion(Quaternion):
    """Rotation quaternion, renormalized on construction.

    Inputs within UNIT_TOL of unit norm are accepted and renormalized
    (integration drift at 1 kHz makes exact unit inputs unrealistic);
    anything further off is rejected.
    """

    def __init__(self, w=1.0, x=0.0, y=0.0, z=0.0):
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"norm {n!r} deviates from 1 by more than {UNIT_TOL}")
        super().__init__(w / n, x / n, y / n, z / n)

    @classmethod
    def normalized(cls, w, x, y, z) -> "UnitQuaternion":
        """Unit quaternion along (w,x,y,z); rejects only near-zero input."""
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n < 1e-12:
            raise ValueError("cannot normalize near-zero quaternion")
        return cls(w / n, x / n, y / n, z / n)

    @classmethod
    def from_axis_angle(cls, axis, angle) -> "UnitQuaternion":
        a = np.asarray(axis, dtype=float)
        n = np.linalg.norm(a)
        if n < 1e-12:
            raise ValueError("rotation axis must be nonzero")
        a = a / n
        h = 0.5 * float(angle)
        s = math.sin(h)
        return cls(math.cos(h), s * a[0], s * a[1], s * a[2])

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    def to_matrix(self) -> np.ndarray:
        """3x3 rotation matrix of this quaternion."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product a*b (i^2 = j^2 = k^2 = ijk = -1)."""
    w = a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z
    x = a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y
    y = a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x
    z = a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w
    return Quaternion(w, x, y, z)


def conj(q: Quaternion) -> Quaternion:
    """Conjugate; for a unit rotation this is the inverse rotation."""
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def vec3(t: Quaternion) -> np.ndarray:
    """Coordinates [t_x, t_y, t_z] of a pure quaternion.

    Raises ValueError when the scalar part exceeds PURE_TOL.
    """
    if abs(t.w) > PURE_TOL:
        raise ValueError(f"vec3 requires a pure quaternion, got w={t.w!r}")
    return np.array([t.x, t.y, t.z])


def vec4(q: Quaternion) -> np.ndarray:
    """Coordinates [w, x, y, z], scalar first."""
    return np.array([q.w, q.x, q.y, q.z])


def rotation_error_switching(r: Quaternion, r_d: Quaternion) -> Quaternion:
    """Switching rotational error between current r and desired r_d.

    Returns conj(r)*r_d - 1 when that branch has the strictly smaller
    2-norm, conj(r)*r_d + 1 otherwise. Unit quaternions double-cover the
    rotations, so r_d and -r_d are the same orientation; picking the
    branch closer to zero avoids commanding a needless near-360 degree
    rotation. Ties go to the minus branch.
    """
    _check_unit(r)
    _check_unit(r_d)
    e = quat_mul(conj(r), r_d)
    one = Quaternion(1.0, 0.0, 0.0, 0.0)
    minus = e - one
    plus = e + one
    if minus.norm() <= plus.norm():
        return minus
    return plus


def rotate_point(r: UnitQuaternion, t: Quaternion) -> Quaternion:
    """Rotate pure quaternion t by r, i.e. r * t * conj(r)."""
    if not t.is_pure():
        raise ValueError("rotate_point requires a pure quaternion")
    out = quat_mul(quat_mul(r, t), conj(r))
    # the scalar part is zero in exact arithmetic; pin it so purity survives
    return Quaternion(0.0, out.x, out.y, out.z)


def _check_unit(q: Quaternion, tol=UNIT_TOL):
    n = q.norm()
    if abs(n - 1.0) > tol:
        raise ValueError(f"expected unit quaternion, norm is {n!r}")
