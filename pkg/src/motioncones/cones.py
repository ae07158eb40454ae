"""Motion cones: the set of object twists reachable with a sticking push.

Construction follows the force-balance route: for a unit pusher wrench w_p on
an edge of the pusher's generalized friction cone, the grasp contact wrench
w_c must satisfy

    Jc' w_c = (k / -f_max) w_p + (1 / -f_max) w_g,   k > 0,

together with the normalized limit-surface constraint
fx^2 + fz^2 + (my/rc)^2 = 1 (w_g is the gravity wrench, f_max the grasp
friction force). Writing w_c = alpha*a + b with a = Jc^-T w_p and
b = -Jc^-T w_g / f_max turns the constraint into a scalar quadratic in alpha
whose unique negative root gives k = -f_max * alpha > 0. Mapping each solved
grasp wrench through the limit-surface twist map yields the generators of the
polyhedral motion cone; with zero gravity the construction is exact and the
cone equals the image of the negated pusher cone.

Membership is decided by facet-normal tests on the polyhedral cone, while
is_stable_push answers the exact (curved-surface) question directly in wrench
space via nonnegative least squares; the two intentionally share no geometry
code so one can serve as the oracle for the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import nnls

from .contacts import LimitSurfaceModel, WrenchCone, generalized_friction_cone, wrench_from_twist, twist_from_wrench
from .geometry import PlanarPose, Twist, TwistMetric, Wrench, twist_jacobian
from .scene import Scene

MEMBERSHIP_EPS = 1e-9
_FACET_TOL = 1e-10
_PROJECT_EPS = 1e-7


class NoPositiveRootError(RuntimeError):
    """The gravity wrench exceeds the friction capacity along a pusher direction."""

    def __init__(self, message: str, generator_index: int | None = None):
        super().__init__(message)
        self.generator_index = generator_index


class HypothesisViolatedError(ValueError):
    """min_grasp_force requires a twist inside the gravity-free cone."""


@dataclass
class PushConfig:
    """Everything needed to answer cone queries at one object pose and pusher."""

    scene: Scene
    q: PlanarPose
    pusher_label: str
    grasp_force: float
    jacobian: np.ndarray = field(repr=False)  # object twist -> grasp contact twist
    jt_inv: np.ndarray = field(repr=False)  # inverse of jacobian.T, cached
    limit: LimitSurfaceModel = field(repr=False)
    gravity_wrench: np.ndarray = field(repr=False)  # (3,) N / N*mm, object frame
    pusher_cone: WrenchCone = field(repr=False)
    metric: TwistMetric = field(repr=False)


def push_config(
    scene: Scene,
    q: PlanarPose,
    pusher_label: str,
    grasp_force: float | None = None,
    gravity_scale: float = 1.0,
) -> PushConfig:
    if pusher_label not in scene.pushers:
        raise KeyError(f"unknown pusher {pusher_label!r}")
    force = scene.grasp_force if grasp_force is None else grasp_force
    frame = scene.grasp_frame_at(q)
    jac = twist_jacobian(frame)
    return PushConfig(
        scene=scene,
        q=q,
        pusher_label=pusher_label,
        grasp_force=force,
        jacobian=jac,
        jt_inv=np.linalg.inv(jac.T),
        limit=scene.limit_surface(force),
        gravity_wrench=gravity_scale * scene.gravity_wrench_at(q),
        pusher_cone=scene.pusher_cone(pusher_label),
        metric=scene.metric,
    )


def solve_grasp_wrench(cfg: PushConfig, w_pusher: np.ndarray) -> tuple[Wrench, float]:
    """Unique grasp wrench and pusher magnitude balancing a unit pusher wrench.

    Returns (w_c, k) with w_c on the normalized limit surface and k > 0 the
    scale of w_pusher in the force balance. Raises NoPositiveRootError when
    gravity cannot be balanced along this direction.
    """
    ls = cfg.limit
    rc2 = ls.rc**2
    a = cfg.jt_inv @ np.asarray(w_pusher, dtype=float)
    b = cfg.jt_inv @ (-cfg.gravity_wrench / ls.f_max)

    def quad(u, v):
        return u[0] * v[0] + u[1] * v[1] + u[2] * v[2] / rc2

    qa = quad(a, a)
    qb = quad(a, b)
    qc = quad(b, b) - 1.0
    disc = qb * qb - qa * qc
    if disc < 0.0:
        raise NoPositiveRootError("pusher direction never reaches the limit surface")
    root = math.sqrt(disc)
    lo = (-qb - root) / qa  # smaller root (qa > 0)
    hi = (-qb + root) / qa
    if qc < 0.0:
        alpha = lo  # roots straddle zero; the negative one is unique
    elif lo < 0.0 and hi < 0.0:
        raise NoPositiveRootError(
            "two admissible roots: gravity wrench lies outside the limit surface "
            f"(residual {qc:.3e}); configuration rejected"
        )
    elif lo < 0.0 <= hi:
        alpha = lo
    else:
        raise NoPositiveRootError("gravity wrench exceeds the grasp friction capacity")
    w_c = alpha * a + b
    return Wrench(*w_c), -ls.f_max * alpha


class Facet(NamedTuple):
    normal: np.ndarray  # outward unit normal in metric twist coordinates
    pair: tuple[int, int]  # indices of the two defining generators


@dataclass
class MotionCone:
    """Finitely generated cone of object twists (metric-unit generators)."""

    generators: tuple[Twist, ...]
    grasp_wrenches: tuple[Wrench, ...]  # solved unit grasp wrench per generator
    pusher_magnitudes: tuple[float, ...]
    facets: tuple[Facet, ...]
    degenerate: bool
    is_polyhedral_approx: bool
    source: PushConfig = field(repr=False)
    scaled: np.ndarray = field(repr=False)  # (m, 3) metric coordinates of generators
    facet_normals: np.ndarray = field(repr=False)  # (F, 3) outward unit normals


def _assemble_cone(
    entries: list[tuple[Twist, Wrench, float]],
    cfg: PushConfig,
    polyhedral: bool,
) -> MotionCone:
    metric = cfg.metric
    scaled = np.array([metric.scale(t) for t, _, _ in entries])

    degenerate = False
    order = list(range(len(entries)))
    axis = scaled.sum(axis=0)
    axis_norm = np.linalg.norm(axis)
    if axis_norm < 1e-9:
        degenerate = True
    else:
        axis = axis / axis_norm
        seed = np.eye(3)[int(np.argmin(np.abs(axis)))]
        u = np.cross(axis, seed)
        u /= np.linalg.norm(u)
        v = np.cross(axis, u)
        angles = np.arctan2(scaled @ v, scaled @ u)
        order = list(np.argsort(angles, kind="stable"))

    entries = [entries[i] for i in order]
    scaled = scaled[order]
    m = len(entries)

    facets: list[Facet] = []
    if m >= 3 and not degenerate:
        for i in range(m):
            for j in range(i + 1, m):
                n = np.cross(scaled[i], scaled[j])
                nn = np.linalg.norm(n)
                if nn < 1e-12:
                    continue
                n = n / nn
                d = scaled @ n
                below, above = float(np.max(d)) <= _FACET_TOL, float(np.min(d)) >= -_FACET_TOL
                if below and above:
                    degenerate = True  # all generators coplanar
                elif below:
                    facets.append(Facet(n, (i, j)))
                elif above:
                    facets.append(Facet(-n, (i, j)))
        if float(np.min(scaled @ (axis if axis_norm >= 1e-9 else scaled[0]))) <= 1e-9:
            degenerate = True  # not pointed
        if len(facets) < 3:
            degenerate = True
    else:
        degenerate = True

    if degenerate:
        facets = []
    return MotionCone(
        generators=tuple(t for t, _, _ in entries),
        grasp_wrenches=tuple(w for _, w, _ in entries),
        pusher_magnitudes=tuple(k for _, _, k in entries),
        facets=tuple(facets),
        degenerate=degenerate,
        is_polyhedral_approx=polyhedral,
        source=cfg,
        scaled=scaled,
        facet_normals=np.array([f.normal for f in facets]) if facets else np.zeros((0, 3)),
    )


def gravity_free_cone(cfg: PushConfig) -> MotionCone:
    """Motion cone ignoring gravity: the exact image of the negated pusher cone.

    Independent of the grasp force and grasp friction coefficient.
    """
    ls = cfg.limit
    frame = cfg.scene.grasp_frame_at(cfg.q)
    entries = []
    for g in cfg.pusher_cone.generators:
        raw = -(cfg.jt_inv @ g)
        w = Wrench(*raw)
        norm = math.sqrt(w.fx**2 + w.fz**2 + (w.my / ls.rc) ** 2)
        w = Wrench(w.fx / norm, w.fz / norm, w.my / norm)
        t = twist_from_wrench(ls, w, frame, cfg.metric)
        entries.append((t, w, ls.f_max / norm))
    return _assemble_cone(entries, cfg, polyhedral=False)


def polyhedral_cone(cfg: PushConfig) -> MotionCone:
    """Polyhedral motion cone: one generator per pusher-cone edge.

    Step 1 solves the force balance per edge, step 2 collects the grasp
    wrenches, step 3 maps them to twists; facets come from adjacent pairs.
    """
    frame = cfg.scene.grasp_frame_at(cfg.q)
    entries = []
    for i, g in enumerate(cfg.pusher_cone.generators):
        try:
            w_c, k = solve_grasp_wrench(cfg, g)
        except NoPositiveRootError as exc:
            raise NoPositiveRootError(str(exc), generator_index=i) from exc
        t = twist_from_wrench(cfg.limit, w_c, frame, cfg.metric)
        entries.append((t, w_c, k))
    return _assemble_cone(entries, cfg, polyhedral=True)


def _unit_scaled(cone: MotionCone, t: Twist) -> np.ndarray:
    s = cone.source.metric.scale(t)
    n = np.linalg.norm(s)
    if n == 0.0:
        raise ValueError("zero twist")
    return s / n


def _nnls_member(generators: np.ndarray, x: np.ndarray, eps: float) -> bool:
    # the residual is recomputed explicitly; scipy's returned rnorm is not
    # reliable across versions
    lam, _ = nnls(generators.T, x)
    return float(np.linalg.norm(generators.T @ lam - x)) <= eps


def contains(cone: MotionCone, t: Twist, eps: float = MEMBERSHIP_EPS) -> bool:
    """True iff t is a nonnegative combination of the cone generators."""
    s = _unit_scaled(cone, t)
    if cone.degenerate:
        return _nnls_member(cone.scaled, s, eps)
    return float(np.max(cone.facet_normals @ s)) <= eps


def project(cone: MotionCone, t: Twist) -> Twist:
    """The unit twist in the cone with maximal metric cosine to t (t if inside)."""
    s = _unit_scaled(cone, t)
    metric = cone.source.metric
    if contains(cone, t):
        return metric.normalize(t)

    candidates: list[tuple[float, np.ndarray]] = []
    for i, g in enumerate(cone.scaled):
        candidates.append((float(g @ s), g))
    if not cone.degenerate:
        normals = cone.facet_normals
        for facet in cone.facets:
            p = s - float(facet.normal @ s) * facet.normal
            pn = np.linalg.norm(p)
            if pn < 1e-12:
                continue
            p = p / pn
            if float(np.max(normals @ p)) <= _PROJECT_EPS:
                candidates.append((float(p @ s), p))
    elif len(cone.scaled) == 2:
        g0, g1 = cone.scaled
        n = np.cross(g0, g1)
        nn = np.linalg.norm(n)
        if nn > 1e-12:
            n = n / nn
            p = s - float(n @ s) * n
            pn = np.linalg.norm(p)
            if pn > 1e-12:
                p = p / pn
                gram = np.array([[g0 @ g0, g0 @ g1], [g0 @ g1, g1 @ g1]])
                coeff = np.linalg.solve(gram, np.array([g0 @ p, g1 @ p]))
                if coeff[0] >= -1e-9 and coeff[1] >= -1e-9:
                    candidates.append((float(p @ s), p))

    best = max(candidates, key=lambda c: c[0])
    return metric.unscale(best[1])


def boundary_angle(cone: MotionCone, t: Twist) -> float:
    """Angular distance (rad, metric space) from t to the cone boundary surface."""
    s = _unit_scaled(cone, t)
    inside = contains(cone, t)
    if inside:
        if cone.degenerate:
            return 0.0  # a flat cone is all boundary
        sines = np.abs(cone.facet_normals @ s)
        return float(np.arcsin(np.clip(np.min(sines), -1.0, 1.0)))
    p = cone.source.metric.scale(project(cone, t))
    cosine = float(np.clip(p @ s / np.linalg.norm(p), -1.0, 1.0))
    return math.acos(cosine)


def facet_pairs(rays: np.ndarray, tol: float = _FACET_TOL) -> list[tuple[int, int]]:
    """Generator index pairs spanning the facets of the conic hull of unit rays."""
    rays = np.atleast_2d(rays)
    m = len(rays)
    pairs = []
    for i in range(m):
        for j in range(i + 1, m):
            n = np.cross(rays[i], rays[j])
            nn = np.linalg.norm(n)
            if nn < 1e-12:
                continue
            d = rays @ (n / nn)
            if float(np.max(d)) <= tol or float(np.min(d)) >= -tol:
                pairs.append((i, j))
    return pairs


def _required_pusher_wrench(cfg: PushConfig, t: Twist, grasp_force: float | None) -> np.ndarray:
    ls = cfg.limit if grasp_force is None else cfg.scene.limit_surface(grasp_force)
    v_contact = cfg.jacobian @ t.as_array()
    w_unit, _ = wrench_from_twist(ls, Twist(*v_contact))
    return -ls.f_max * (cfg.jacobian.T @ w_unit.as_array()) - cfg.gravity_wrench


def is_stable_push(cfg: PushConfig, t: Twist, grasp_force: float | None = None) -> bool:
    """Exact stable-push test: the net required wrench lies in the pusher cone.

    Solved by nonnegative least squares in wrench space; independent of the
    polyhedral cone machinery, so it serves as the exactness oracle for
    membership queries.
    """
    w_req = _required_pusher_wrench(cfg, t, grasp_force)
    scale = float(np.linalg.norm(w_req))
    if scale <= 1e-12 * cfg.limit.f_max:
        return True  # nothing to balance
    return _nnls_member(cfg.pusher_cone.generators, w_req, 1e-7 * scale)


def min_grasp_force(
    cfg: PushConfig,
    t: Twist,
    n_max: float = 1000.0,
    rel_tol: float = 1e-6,
) -> float:
    """Least grasp force making t a stable push; inf when n_max is not enough.

    Requires t inside the gravity-free cone (the push direction must be
    balanceable at all); the stable set along increasing force is then an
    interval, so bisection is sound.
    """
    ls = cfg.limit
    v_contact = cfg.jacobian @ t.as_array()
    w_unit, _ = wrench_from_twist(ls, Twist(*v_contact))
    direction = -(cfg.jacobian.T @ w_unit.as_array())
    if not _nnls_member(cfg.pusher_cone.generators, direction, 1e-7 * float(np.linalg.norm(direction))):
        raise HypothesisViolatedError("twist lies outside the gravity-free motion cone")
    if is_stable_push(cfg, t, grasp_force=1e-12):
        return 0.0
    if not is_stable_push(cfg, t, grasp_force=n_max):
        return math.inf
    lo, hi = 0.0, float(n_max)
    while hi - lo > rel_tol * n_max:
        mid = 0.5 * (lo + hi)
        if is_stable_push(cfg, t, grasp_force=max(mid, 1e-12)):
            hi = mid
        else:
            lo = mid
    return hi
