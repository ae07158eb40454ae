"""Quasi-static propagation, stick/slip classification, and the seeded
Monte Carlo harness comparing polyhedral classification against the exact
stable-push oracle.

Slip is never rolled out: a commanded twist outside the motion cone executes
as its cone projection (the planner only ever commands stable pushes).
Sampling uses numpy's PCG64 generator so reports are reproducible from the
64-bit seed alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .cones import (
    MotionCone,
    NoPositiveRootError,
    PushConfig,
    boundary_angle,
    contains,
    facet_pairs,
    is_stable_push,
    polyhedral_cone,
    project,
    push_config,
    solve_grasp_wrench,
)
from .contacts import twist_from_wrench
from .geometry import PlanarPose, Twist, apply_twist
from .scene import Scene

STICK_COS_EPS = 1e-9
DEFAULT_BAND_DEG = 2.0


class ConeUnavailableError(RuntimeError):
    """The configuration cannot be pushed stably by this pusher at all."""


@dataclass(frozen=True)
class PushOutcome:
    q_new: PlanarPose
    executed_twist: Twist  # metric-unit
    mode: str  # "stick" or "projected"
    pusher: str


def propagate(cfg: PushConfig, target: Twist, step: float) -> PushOutcome:
    """Advance the object one unit step toward the commanded twist direction.

    The executed twist is the projection of the target onto the polyhedral
    motion cone; callers re-derive the config at q_new for subsequent queries.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    desired = cfg.metric.normalize(target)
    try:
        cone = polyhedral_cone(cfg)
    except NoPositiveRootError as exc:
        raise ConeUnavailableError(
            f"pusher {cfg.pusher_label!r} cannot stabilize any push here ({exc})"
        ) from exc
    executed = project(cone, desired)
    mode = "stick" if cfg.metric.cosine(executed, desired) >= 1.0 - STICK_COS_EPS else "projected"
    return PushOutcome(
        q_new=apply_twist(cfg.q, executed, step),
        executed_twist=executed,
        mode=mode,
        pusher=cfg.pusher_label,
    )


def classify_push(
    cfg: PushConfig,
    displacement: tuple[float, float, float],
    band_deg: float = DEFAULT_BAND_DEG,
) -> str:
    """Classify a commanded displacement [dx mm, dz mm, dtheta rad] as
    stick / boundary / slip against the polyhedral motion cone.

    Scale-free: only the twist direction matters.
    """
    t = Twist(*displacement)
    cone = polyhedral_cone(cfg)
    if contains(cone, t):
        return "stick"
    if boundary_angle(cone, t) <= math.radians(band_deg):
        return "boundary"
    return "slip"


@dataclass(frozen=True)
class SampleRecord:
    idx: int
    dx_mm: float
    dz_mm: float
    dtheta_deg: float
    predicted: str  # stick/slip from polyhedral membership
    oracle: str  # stick/slip from the exact stable-push test
    boundary: bool  # within the angular band of the polyhedral boundary


@dataclass
class ValidationReport:
    scene_name: str
    pusher: str
    n_samples: int
    seed: int
    ranges: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    band_deg: float
    records: list[SampleRecord]
    counts: dict[str, int]
    n_boundary: int
    agreement_excluding_band: float

    def to_csv(self) -> str:
        lines = ["idx,dx_mm,dz_mm,dtheta_deg,predicted,oracle,boundary_flag"]
        for r in self.records:
            lines.append(
                f"{r.idx},{r.dx_mm!r},{r.dz_mm!r},{r.dtheta_deg!r},{r.predicted},{r.oracle},{int(r.boundary)}"
            )
        return "\n".join(lines) + "\n"

    def summary_dict(self) -> dict:
        return {
            "scene": self.scene_name,
            "pusher": self.pusher,
            "n": self.n_samples,
            "seed": self.seed,
            "ranges_mm_mm_deg": [list(r) for r in self.ranges],
            "band_deg": self.band_deg,
            "rng": "numpy-PCG64",
            "counts": dict(self.counts),
            "n_boundary": self.n_boundary,
            "agreement_excluding_band": self.agreement_excluding_band,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary_dict(), indent=2) + "\n"


def monte_carlo_validation(
    scene: Scene,
    pusher: str,
    n: int,
    ranges: tuple[tuple[float, float], tuple[float, float], tuple[float, float]],
    seed: int,
    band_deg: float = DEFAULT_BAND_DEG,
) -> ValidationReport:
    """Uniformly sample commanded displacements and compare the polyhedral
    stick/slip prediction against the exact oracle.

    ranges are ((x0, x1), (z0, z1), (theta0_deg, theta1_deg)); angles convert
    to radians internally. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    for lo, hi in ranges:
        if not lo <= hi:
            raise ValueError("ranges must be well-ordered")
    cfg = push_config(scene, PlanarPose(), pusher)
    cone = polyhedral_cone(cfg)
    band_rad = math.radians(band_deg)
    rng = np.random.Generator(np.random.PCG64(seed))

    records: list[SampleRecord] = []
    counts = {"stick_stick": 0, "stick_slip": 0, "slip_stick": 0, "slip_slip": 0}
    n_boundary = 0
    n_agree_free = 0
    n_free = 0
    for idx in range(n):
        while True:
            dx = rng.uniform(*ranges[0])
            dz = rng.uniform(*ranges[1])
            dth = rng.uniform(*ranges[2])
            if dx != 0.0 or dz != 0.0 or dth != 0.0:
                break
        t = Twist(dx, dz, math.radians(dth))
        predicted = "stick" if contains(cone, t) else "slip"
        oracle = "stick" if is_stable_push(cfg, t) else "slip"
        band = boundary_angle(cone, t) <= band_rad
        counts[f"{predicted}_{oracle}"] += 1
        if band:
            n_boundary += 1
        else:
            n_free += 1
            if predicted == oracle:
                n_agree_free += 1
        records.append(SampleRecord(idx, dx, dz, dth, predicted, oracle, band))

    return ValidationReport(
        scene_name=scene.name,
        pusher=pusher,
        n_samples=n,
        seed=seed,
        ranges=tuple(tuple(r) for r in ranges),
        band_deg=band_deg,
        records=records,
        counts=counts,
        n_boundary=n_boundary,
        agreement_excluding_band=(n_agree_free / n_free) if n_free else 1.0,
    )


def _simplex_weights(n_parts: int, resolution: int) -> np.ndarray:
    """All nonnegative integer compositions of `resolution` into n_parts."""
    rows = []
    for bars in combinations(range(resolution + n_parts - 1), n_parts - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(resolution + n_parts - 2 - prev)
        rows.append(comp)
    return np.array(rows, dtype=float)


def brute_force_cone_oracle(
    cfg: PushConfig,
    resolution: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Densely sample pusher wrenches over the whole generalized friction cone
    and map each through the force balance to a twist.

    Returns (cloud, boundary): metric-space unit twists for the full
    barycentric grid and for sweeps along the pusher cone's facets. The cloud
    certifies that the polyhedral generators are extreme rays of the true
    motion cone; the boundary sweep measures the curvature error of the
    polyhedral approximation.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    gens = cfg.pusher_cone.generators
    frame = cfg.scene.grasp_frame_at(cfg.q)

    def to_twist(w_pusher: np.ndarray) -> np.ndarray:
        w_c, _ = solve_grasp_wrench(cfg, w_pusher)
        t = twist_from_wrench(cfg.limit, w_c, frame, cfg.metric)
        return cfg.metric.scale(t)

    cloud = []
    for lam in _simplex_weights(len(gens), resolution):
        w = lam @ gens
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            continue
        cloud.append(to_twist(w / norm))

    pairs = facet_pairs(gens)
    if not pairs and len(gens) == 2:
        pairs = [(0, 1)]
    boundary = []
    for i, j in pairs:
        for s in np.linspace(0.0, 1.0, resolution + 1):
            w = (1.0 - s) * gens[i] + s * gens[j]
            norm = np.linalg.norm(w)
            if norm < 1e-12:
                continue
            boundary.append(to_twist(w / norm))
    return np.array(cloud), np.array(boundary)


def max_boundary_deviation(cone: MotionCone, boundary: np.ndarray) -> float:
    """Largest angular distance (rad) from boundary twist samples to the
    polyhedral cone surface."""
    worst = 0.0
    for s in boundary:
        t = cone.source.metric.unscale(s)
        worst = max(worst, boundary_angle(cone, t))
    return worst
