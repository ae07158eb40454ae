"""Friction models: the ellipsoidal limit surface of the grasp contact and
Coulomb / generalized friction cones of the pushers.

The limit surface is the ellipsoid w' A w = 1 with A = diag(a^-2, a^-2, b^-2),
a = f_max (max tangential friction force) and b = tau_max (max friction
torque). Unit contact wrenches are stored normalized so that
fx^2 + fz^2 + (my/rc)^2 = 1 with rc = tau_max / f_max, i.e. forces in units of
f_max and torques in units of f_max (my then has units of length and
my in [-rc, rc]).

Sign convention: the stored unit wrench is the friction wrench exerted by the
contact ON the object, which opposes the object's contact-frame velocity
(maximal dissipation). The twist-from-wrench map carries the compensating
sign so the round trip is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ContactFrame, Twist, TwistMetric, Wrench, frame_for_point, twist_jacobian, wrench_transform

# membership/dedup tolerance on unit rays
_RAY_TOL = 1e-9


@dataclass(frozen=True)
class LimitSurfaceModel:
    """Ellipsoidal limit surface of the (composite) grasp contact."""

    f_max: float  # N, max tangential friction magnitude (mu_c * N, summed over fingers)
    tau_max: float  # N*mm, max friction torque about the contact normal

    def __post_init__(self):
        if self.f_max <= 0 or self.tau_max <= 0:
            raise ValueError("limit surface requires f_max > 0 and tau_max > 0")

    @property
    def rc(self) -> float:
        """Torque radius tau_max / f_max (mm)."""
        return self.tau_max / self.f_max

    @classmethod
    def from_grasp(
        cls,
        mu: float,
        normal_force: float,
        patch_radius: float,
        pressure_factor: float = 0.6,
        n_fingers: int = 1,
    ) -> "LimitSurfaceModel":
        f_max = n_fingers * mu * normal_force
        return cls(f_max=f_max, tau_max=patch_radius * pressure_factor * f_max)

    def surface_residual(self, w: Wrench) -> float:
        """fx^2 + fz^2 + (my/rc)^2 - 1 for a unit wrench; zero on the surface."""
        return w.fx**2 + w.fz**2 + (w.my / self.rc) ** 2 - 1.0

    def unit_to_full(self, w: Wrench) -> Wrench:
        """Scale a unit wrench to the physical friction wrench (force f_max)."""
        return Wrench(self.f_max * w.fx, self.f_max * w.fz, self.f_max * w.my)


def wrench_from_twist(ls: LimitSurfaceModel, v_c: Twist) -> tuple[Wrench, Wrench]:
    """Friction wrench on the object for a given slip twist at the contact.

    Returns (unit wrench, full wrench). The unit wrench lies on the normalized
    limit surface and opposes v_c; the full wrench is the unit wrench scaled
    by f_max.
    """
    rc2 = ls.rc**2
    raw = np.array([v_c.vx, v_c.vz, rc2 * v_c.wy])
    scale = math.sqrt(v_c.vx**2 + v_c.vz**2 + rc2 * v_c.wy**2)
    if scale == 0.0:
        raise ValueError("limit surface normal undefined for a zero twist")
    unit = Wrench(*(-raw / scale))
    return unit, ls.unit_to_full(unit)


def twist_from_wrench(
    ls: LimitSurfaceModel,
    w: Wrench,
    frame: ContactFrame,
    metric: TwistMetric,
) -> Twist:
    """Object-frame twist direction for a unit wrench on the limit surface.

    The twist at the contact is the (sign-compensated) surface normal
    -diag(1, 1, rc^-2) @ w; mapping through the inverse contact Jacobian gives
    the object twist, normalized under the metric.
    """
    residual = ls.surface_residual(w)
    if abs(residual) > 1e-8:
        raise ValueError(f"wrench is off the limit surface (residual {residual:.3e})")
    v_contact = -np.array([w.fx, w.fz, w.my / ls.rc**2])
    v_obj = np.linalg.solve(twist_jacobian(frame), v_contact)
    return metric.normalize(Twist(*v_obj))


def friction_cone_edges(normal: tuple[float, float], mu: float) -> tuple[np.ndarray, np.ndarray]:
    """The two unit edge forces of a planar Coulomb cone; mu = 0 doubles the normal."""
    if mu < 0:
        raise ValueError("friction coefficient must be >= 0")
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    t = np.array([n[1], -n[0]])
    e1 = n + mu * t
    e2 = n - mu * t
    return e1 / np.linalg.norm(e1), e2 / np.linalg.norm(e2)


@dataclass(frozen=True)
class PusherContact:
    """A pusher modeled as 1-2 point contacts fixed in the object frame."""

    label: str
    points: tuple[tuple[float, float], ...]  # object-frame positions (mm)
    normals: tuple[tuple[float, float], ...]  # inward unit normals
    mu: float

    def __post_init__(self):
        if not 1 <= len(self.points) <= 2 or len(self.points) != len(self.normals):
            raise ValueError("pusher needs 1 or 2 contact points with matching normals")
        if self.mu < 0:
            raise ValueError("friction coefficient must be >= 0")

    def frames(self) -> list[ContactFrame]:
        return [frame_for_point(p, n) for p, n in zip(self.points, self.normals)]


@dataclass(frozen=True)
class WrenchCone:
    """Finitely generated convex cone in object-frame wrench space.

    Generators are stored as Euclidean-unit rows of shape (m, 3).
    """

    generators: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        norms = np.linalg.norm(g, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("wrench cone generators must be nonzero")
        object.__setattr__(self, "generators", g / norms[:, None])

    def __len__(self) -> int:
        return self.generators.shape[0]


def generalized_friction_cone(pusher: PusherContact) -> WrenchCone:
    """Pusher friction cone mapped to object-frame wrench space.

    One pair of generators per constituent point contact (the mapped Coulomb
    edges); colinear duplicates are removed.
    """
    rays: list[np.ndarray] = []
    for frame in pusher.frames():
        jt = wrench_transform(frame)
        for edge in friction_cone_edges(frame.normal, pusher.mu):
            # edge force in object-frame components with zero contact torque
            f_contact = np.array([edge @ np.asarray(frame.tangent), edge @ np.asarray(frame.normal), 0.0])
            w = jt @ f_contact
            w = w / np.linalg.norm(w)
            if not any(np.linalg.norm(w - r) < _RAY_TOL for r in rays):
                rays.append(w)
    return WrenchCone(np.array(rays))
