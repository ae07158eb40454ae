"""Planar rigid-body kinematics in the XZ grasp plane.

Conventions: the plane of motion is XZ with gravity along -Z; rotations are
right-handed about +Y, so the in-plane rotation matrix is
R(theta) = [[cos, sin], [-sin, cos]] acting on (x, z), the moment of a force f
applied at r is m_y = r_z*f_x - r_x*f_z, and the velocity of a body point at r
is (v_x + w*r_z, v_z - w*r_x). Angles wrap to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    t = math.fmod(theta, _TWO_PI)
    if t <= -math.pi:
        t += _TWO_PI
    elif t > math.pi:
        t -= _TWO_PI
    return t


def rotation(theta: float) -> np.ndarray:
    """In-plane rotation matrix for a right-handed rotation about +Y."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


@dataclass(frozen=True)
class PlanarPose:
    """Pose of the object in the gripper frame: translation (mm) + rotation (rad)."""

    x: float = 0.0
    z: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.z, self.theta])


@dataclass(frozen=True)
class Twist:
    """Planar generalized velocity [vx, vz, wy]; scale-free when used as a cone ray."""

    vx: float
    vz: float
    wy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vz, self.wy])


@dataclass(frozen=True)
class Wrench:
    """Planar generalized force [fx (N), fz (N), my (N*mm)]."""

    fx: float
    fz: float
    my: float

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fz, self.my])


@dataclass(frozen=True)
class ContactFrame:
    """A contact frame fixed in the object frame.

    origin is the contact point (mm), tangent/normal the in-plane axes; the
    normal points into the object.
    """

    origin: tuple[float, float]
    tangent: tuple[float, float] = (1.0, 0.0)
    normal: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        t, n = np.asarray(self.tangent), np.asarray(self.normal)
        if abs(np.linalg.norm(t) - 1.0) > 1e-12 or abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("contact frame axes must be unit vectors")
        if abs(float(t @ n)) > 1e-12:
            raise ValueError("contact frame axes must be orthogonal")


def frame_for_point(origin: tuple[float, float], normal: tuple[float, float]) -> ContactFrame:
    """Contact frame at a point with the given inward normal; tangent = (n_z, -n_x)."""
    nx, nz = normal
    norm = math.hypot(nx, nz)
    nx, nz = nx / norm, nz / norm
    return ContactFrame(origin=tuple(origin), tangent=(nz, -nx), normal=(nx, nz))


def twist_jacobian(frame: ContactFrame) -> np.ndarray:
    """Map an object-frame twist to the contact frame (v_contact = J @ v_object).

    Rows: tangent and normal components of the velocity of the object material
    point at the frame origin (lever term w x r included), then the unchanged
    angular rate. Always invertible.
    """
    tx, tz = frame.tangent
    nx, nz = frame.normal
    rx, rz = frame.origin
    return np.array(
        [
            [tx, tz, tx * rz - tz * rx],
            [nx, nz, nx * rz - nz * rx],
            [0.0, 0.0, 1.0],
        ]
    )


def wrench_transform(frame: ContactFrame) -> np.ndarray:
    """Map a contact-frame wrench to the object frame (w_object = Jt @ w_contact).

    Dual to twist_jacobian: wrench_transform(f) == twist_jacobian(f).T.
    """
    return twist_jacobian(frame).T


def compose(a: PlanarPose, b: PlanarPose) -> PlanarPose:
    """Pose composition T(a) * T(b)."""
    ca, sa = math.cos(a.theta), math.sin(a.theta)
    # R(theta) @ (x, z) with R = [[c, s], [-s, c]]
    x = a.x + ca * b.x + sa * b.z
    z = a.z - sa * b.x + ca * b.z
    return PlanarPose(x, z, a.theta + b.theta)


def inverse(p: PlanarPose) -> PlanarPose:
    c, s = math.cos(p.theta), math.sin(p.theta)
    # -R(-theta) @ t, with R(-theta) = R(theta).T
    return PlanarPose(-(c * p.x - s * p.z), -(s * p.x + c * p.z), -p.theta)


def apply_twist(q: PlanarPose, t: Twist, step: float) -> PlanarPose:
    """First-order body-frame integration of a twist over `step`."""
    if step < 0:
        raise ValueError("step must be >= 0")
    return compose(q, PlanarPose(t.vx * step, t.vz * step, t.wy * step))


def pose_difference(a: PlanarPose, b: PlanarPose) -> Twist:
    """Body-frame displacement taking a to b, as a twist integrated over unit step.

    Exact inverse of apply_twist(a, ., 1.0): apply_twist(a, pose_difference(a, b), 1)
    recovers b.
    """
    d = compose(inverse(a), b)
    return Twist(d.x, d.z, d.theta)


def transform_point(q: PlanarPose, point: tuple[float, float]) -> tuple[float, float]:
    """Object-frame point -> gripper frame under pose q."""
    c, s = math.cos(q.theta), math.sin(q.theta)
    px, pz = point
    return (q.x + c * px + s * pz, q.z - s * px + c * pz)


def inverse_transform_point(q: PlanarPose, point: tuple[float, float]) -> tuple[float, float]:
    """Gripper-frame point -> object frame under pose q."""
    c, s = math.cos(q.theta), math.sin(q.theta)
    dx, dz = point[0] - q.x, point[1] - q.z
    return (c * dx - s * dz, s * dx + c * dz)


@dataclass(frozen=True)
class TwistMetric:
    """Weighted twist norm: rotation converts to translation at length_scale mm/rad."""

    length_scale: float = 25.0

    def __post_init__(self):
        if self.length_scale <= 0:
            raise ValueError("length_scale must be > 0")

    def scale(self, t: Twist) -> np.ndarray:
        """Twist -> metric coordinates (vx, vz, L*wy), where the norm is Euclidean."""
        return np.array([t.vx, t.vz, self.length_scale * t.wy])

    def unscale(self, v: np.ndarray) -> Twist:
        return Twist(float(v[0]), float(v[1]), float(v[2]) / self.length_scale)

    def norm(self, t: Twist) -> float:
        return math.sqrt(t.vx**2 + t.vz**2 + (self.length_scale * t.wy) ** 2)

    def normalize(self, t: Twist) -> Twist:
        n = self.norm(t)
        if n == 0.0:
            raise ValueError("cannot normalize a zero twist")
        return Twist(t.vx / n, t.vz / n, t.wy / n)

    def cosine(self, a: Twist, b: Twist) -> float:
        sa, sb = self.scale(a), self.scale(b)
        na, nb = np.linalg.norm(sa), np.linalg.norm(sb)
        if na == 0.0 or nb == 0.0:
            raise ValueError("cosine undefined for zero twists")
        return float(sa @ sb) / (na * nb)

    def distance(self, a: PlanarPose, b: PlanarPose) -> float:
        return self.norm(pose_difference(a, b))
