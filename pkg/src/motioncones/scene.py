"""Scene files: object geometry, grasp, pushers, gravity, planner overrides.

Scenes are JSON documents (conventionally *.scene) with a schema_version
field. Units at the file boundary are mm, g, N and degrees; internally the
package uses mm, kg, N and radians. On parse the object polygon and pusher
points are re-centered on the center of gravity so the object frame coincides
with the COG and the gravity wrench has no torque component; emit() writes
this normalized form, so parse(emit(s)) == s.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import polygon as poly
from .contacts import LimitSurfaceModel, PusherContact
from .geometry import ContactFrame, PlanarPose, TwistMetric, inverse_transform_point, rotation

SCHEMA_VERSION = 1

_PLANNER_KEYS = {
    "length_scale_mm_per_rad",
    "step_mm",
    "goal_tolerance",
    "cost_threshold",
    "same_pusher_cost",
    "switch_pusher_cost",
    "t_init",
    "max_fail",
    "rewire_radius_mm",
    "goal_bias",
    "max_iterations",
    "bounds",
}


class SceneError(ValueError):
    """Scene schema or invariant violations; carries the full list of problems."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class Scene:
    """A validated, normalized scene (object frame at the center of gravity)."""

    name: str
    polygon: np.ndarray  # (n, 2) mm, COG-centered, counterclockwise
    mass_kg: float
    gravity_accel: float  # m/s^2
    gravity_dir: tuple[float, float]  # unit, gripper frame
    plane_tilt_deg: float
    grasp_center: tuple[float, float]  # gripper frame, mm
    patch_radius: float  # mm
    pressure_factor: float
    n_fingers: int
    grasp_force: float  # N
    mu_grasp: float
    containment_margin: float  # mm
    pushers: dict[str, PusherContact]
    pusher_faces: dict[str, tuple[int, ...]] = field(repr=False)
    planner_overrides: dict = field(default_factory=dict)
    _pusher_cones: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def metric(self) -> TwistMetric:
        return TwistMetric(self.planner_overrides.get("length_scale_mm_per_rad", 25.0))

    def pusher_cone(self, label: str):
        """Generalized friction cone of a pusher (pose-independent, cached)."""
        if label not in self._pusher_cones:
            from .contacts import generalized_friction_cone

            self._pusher_cones[label] = generalized_friction_cone(self.pushers[label])
        return self._pusher_cones[label]

    def limit_surface(self, grasp_force: float | None = None) -> LimitSurfaceModel:
        force = self.grasp_force if grasp_force is None else grasp_force
        return LimitSurfaceModel.from_grasp(
            mu=self.mu_grasp,
            normal_force=force,
            patch_radius=self.patch_radius,
            pressure_factor=self.pressure_factor,
            n_fingers=self.n_fingers,
        )

    def gravity_force(self) -> np.ndarray:
        """In-plane gravity force on the object (N, gripper frame)."""
        scale = self.mass_kg * self.gravity_accel * math.cos(math.radians(self.plane_tilt_deg))
        return scale * np.asarray(self.gravity_dir)

    def grasp_frame_at(self, q: PlanarPose) -> ContactFrame:
        """Finger-patch contact frame in the object frame at pose q (object axes)."""
        origin = inverse_transform_point(q, self.grasp_center)
        return ContactFrame(origin=origin)

    def gravity_wrench_at(self, q: PlanarPose) -> np.ndarray:
        """Gravity wrench in the object frame (force through the COG, zero torque)."""
        f_obj = rotation(q.theta).T @ self.gravity_force()
        return np.array([f_obj[0], f_obj[1], 0.0])

    def pusher_labels(self) -> list[str]:
        return list(self.pushers.keys())

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "object": {
                "polygon_mm": [[float(x), float(z)] for x, z in self.polygon],
                "mass_g": self.mass_kg * 1000.0,
                "cog_mm": [0.0, 0.0],
            },
            "gravity": {
                "accel_m_s2": self.gravity_accel,
                "direction": [float(self.gravity_dir[0]), float(self.gravity_dir[1])],
                "plane_tilt_deg": self.plane_tilt_deg,
            },
            "grasp": {
                "center_mm": [float(self.grasp_center[0]), float(self.grasp_center[1])],
                "patch_radius_mm": self.patch_radius,
                "pressure_factor": self.pressure_factor,
                "n_fingers": self.n_fingers,
                "force_n": self.grasp_force,
                "mu": self.mu_grasp,
                "containment_margin_mm": self.containment_margin,
            },
            "pushers": [
                {
                    "label": p.label,
                    "points_mm": [[float(x), float(z)] for x, z in p.points],
                    "normals": [[float(x), float(z)] for x, z in p.normals],
                    "mu": p.mu,
                }
                for p in self.pushers.values()
            ],
            "planner": dict(self.planner_overrides),
        }


def emit_scene(scene: Scene) -> str:
    """Normalized JSON form of a scene; parse(emit(s)) reproduces s."""
    return json.dumps(scene.to_dict(), indent=2) + "\n"


def _vec2(value, what: str, problems: list[str]) -> tuple[float, float] | None:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(c, (int, float)) and math.isfinite(c) for c in value)
    ):
        problems.append(f"{what} must be a finite [x, z] pair")
        return None
    return (float(value[0]), float(value[1]))


def _positive(value, what: str, problems: list[str]) -> float | None:
    if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        problems.append(f"{what} must be a positive number")
        return None
    return float(value)


def parse_scene_dict(data: dict, name_hint: str = "scene") -> Scene:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise SceneError(["scene document must be a JSON object"])

    if data.get("schema_version") != SCHEMA_VERSION:
        problems.append(f"schema_version must be {SCHEMA_VERSION}")
    name = data.get("name", name_hint)

    obj = data.get("object", {})
    raw_poly = obj.get("polygon_mm", [])
    vertices = []
    if not isinstance(raw_poly, list) or len(raw_poly) < 3:
        problems.append("object.polygon_mm must list at least 3 vertices")
    else:
        for i, v in enumerate(raw_poly):
            pt = _vec2(v, f"object.polygon_mm[{i}]", problems)
            if pt is not None:
                vertices.append(pt)
    polygon = np.array(vertices) if len(vertices) >= 3 else None
    if polygon is not None:
        for i, j in poly.self_intersections(polygon):
            problems.append(f"object polygon is self-intersecting: edge {i}-{(i + 1) % len(polygon)} crosses edge {j}-{(j + 1) % len(polygon)}")
        if poly.signed_area(polygon) <= 0:
            problems.append("object polygon must be counterclockwise")

    mass_g = _positive(obj.get("mass_g"), "object.mass_g", problems)
    cog = _vec2(obj.get("cog_mm", [0.0, 0.0]), "object.cog_mm", problems)

    grav = data.get("gravity", {})
    accel = grav.get("accel_m_s2", 9.81)
    if not isinstance(accel, (int, float)) or not math.isfinite(accel) or accel < 0:
        problems.append("gravity.accel_m_s2 must be a nonnegative number")
        accel = 9.81
    gdir = _vec2(grav.get("direction", [0.0, -1.0]), "gravity.direction", problems)
    if gdir is not None:
        n = math.hypot(*gdir)
        if n == 0.0:
            problems.append("gravity.direction must be nonzero")
            gdir = (0.0, -1.0)
        else:
            gdir = (gdir[0] / n, gdir[1] / n)
    tilt = grav.get("plane_tilt_deg", 0.0)
    if not isinstance(tilt, (int, float)) or not 0.0 <= tilt <= 90.0:
        problems.append("gravity.plane_tilt_deg must be in [0, 90]")
        tilt = 0.0

    grasp = data.get("grasp", {})
    center = _vec2(grasp.get("center_mm", [0.0, 0.0]), "grasp.center_mm", problems)
    patch_radius = _positive(grasp.get("patch_radius_mm"), "grasp.patch_radius_mm", problems)
    pressure = grasp.get("pressure_factor", 0.6)
    if not isinstance(pressure, (int, float)) or not 0.0 < pressure <= 1.0:
        problems.append("grasp.pressure_factor must be in (0, 1]")
        pressure = 0.6
    n_fingers = grasp.get("n_fingers", 2)
    if not isinstance(n_fingers, int) or n_fingers < 1:
        problems.append("grasp.n_fingers must be a positive integer")
        n_fingers = 1
    force = _positive(grasp.get("force_n"), "grasp.force_n", problems)
    mu_grasp = _positive(grasp.get("mu"), "grasp.mu", problems)
    margin = grasp.get("containment_margin_mm")
    if margin is None:
        margin = patch_radius
    elif not isinstance(margin, (int, float)) or not math.isfinite(margin) or margin < 0:
        problems.append("grasp.containment_margin_mm must be a nonnegative number or null")
        margin = patch_radius

    pushers: dict[str, PusherContact] = {}
    pusher_faces: dict[str, tuple[int, ...]] = {}
    raw_pushers = data.get("pushers", [])
    if not isinstance(raw_pushers, list) or not raw_pushers:
        problems.append("pushers must be a non-empty list")
        raw_pushers = []
    for k, entry in enumerate(raw_pushers):
        label = entry.get("label") if isinstance(entry, dict) else None
        if not isinstance(label, str) or not label:
            problems.append(f"pushers[{k}].label must be a non-empty string")
            continue
        if label in pushers:
            problems.append(f"duplicate pusher label {label!r}")
            continue
        pts_raw = entry.get("points_mm", [])
        nrm_raw = entry.get("normals", [])
        if not isinstance(pts_raw, list) or not 1 <= len(pts_raw) <= 2 or len(nrm_raw) != len(pts_raw):
            problems.append(f"pusher {label!r} needs 1-2 points with matching normals")
            continue
        pts, nrms, ok = [], [], True
        for m, (p, n) in enumerate(zip(pts_raw, nrm_raw)):
            pv = _vec2(p, f"pusher {label!r} point {m}", problems)
            nv = _vec2(n, f"pusher {label!r} normal {m}", problems)
            if pv is None or nv is None:
                ok = False
                continue
            nn = math.hypot(*nv)
            if nn == 0.0:
                problems.append(f"pusher {label!r} normal {m} must be nonzero")
                ok = False
                continue
            pts.append(pv)
            nrms.append((nv[0] / nn, nv[1] / nn))
        mu_p = entry.get("mu")
        if not isinstance(mu_p, (int, float)) or not math.isfinite(mu_p) or mu_p < 0:
            problems.append(f"pusher {label!r} mu must be a nonnegative number")
            ok = False
        if not ok:
            continue
        if polygon is not None and cog is not None:
            faces = []
            for m, (p, n) in enumerate(zip(pts, nrms)):
                p_c = (p[0] - cog[0], p[1] - cog[1])
                edge, dist = poly.nearest_edge(polygon - np.asarray(cog), p_c)
                if dist > 1e-6:
                    problems.append(f"pusher {label!r} point {m} does not lie on the object boundary")
                    continue
                inward = poly.edge_inward_normal(polygon - np.asarray(cog), edge)
                if float(inward @ np.asarray(n)) < 1.0 - 1e-9:
                    problems.append(f"pusher {label!r} normal {m} does not match its face's inward normal")
                    continue
                faces.append(edge)
            if len(faces) == len(pts):
                pusher_faces[label] = tuple(faces)
                pushers[label] = PusherContact(
                    label=label,
                    points=tuple((p[0] - cog[0], p[1] - cog[1]) for p in pts),
                    normals=tuple(nrms),
                    mu=float(mu_p),
                )

    overrides = data.get("planner", {})
    if not isinstance(overrides, dict):
        problems.append("planner must be an object")
        overrides = {}
    for key in overrides:
        if key not in _PLANNER_KEYS:
            problems.append(f"unknown planner key {key!r}")
    clean = {k: v for k, v in overrides.items() if k in _PLANNER_KEYS}
    if "step_mm" in clean and (not isinstance(clean["step_mm"], (int, float)) or clean["step_mm"] <= 0):
        problems.append("planner.step_mm must be positive")
        del clean["step_mm"]
    if "length_scale_mm_per_rad" in clean and (
        not isinstance(clean["length_scale_mm_per_rad"], (int, float)) or clean["length_scale_mm_per_rad"] <= 0
    ):
        problems.append("planner.length_scale_mm_per_rad must be positive")
        del clean["length_scale_mm_per_rad"]

    if problems:
        raise SceneError(problems)

    return Scene(
        name=name,
        polygon=polygon - np.asarray(cog),
        mass_kg=mass_g / 1000.0,
        gravity_accel=float(accel),
        gravity_dir=gdir,
        plane_tilt_deg=float(tilt),
        grasp_center=center,
        patch_radius=patch_radius,
        pressure_factor=float(pressure),
        n_fingers=int(n_fingers),
        grasp_force=force,
        mu_grasp=mu_grasp,
        containment_margin=float(margin),
        pushers=pushers,
        pusher_faces=pusher_faces,
        planner_overrides=clean,
    )


def parse_scene(path: str | Path) -> Scene:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneError([f"invalid JSON at line {exc.lineno}: {exc.msg}"]) from exc
    return parse_scene_dict(data, name_hint=path.stem.removesuffix(".scene"))


def bundled_scene_path(name: str) -> Path:
    """Path to a scene shipped with the package (name without the .scene suffix)."""
    return Path(resources.files("motioncones") / "scenes" / f"{name}.scene")
