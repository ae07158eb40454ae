"""Sampling-based in-hand regrasp planner.

A transition-test-gated RRT* over object poses in the grasp: sample a pose,
step one metric unit from the nearest tree node toward it, project the step
onto the parent's cached motion cones (one per pusher), gate on the
transition test and on grasp survival, then connect through the cheapest
reachable parent and rewire the neighborhood. Edge costs are
same_pusher_cost when an edge keeps the parent's arriving pusher and
switch_pusher_cost otherwise, so plans prefer few pusher switch-overs.

All randomness flows from one seeded PCG64 generator; identical
(scene, params, seed) produce identical trees.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .cones import MotionCone, NoPositiveRootError, contains, is_stable_push, polyhedral_cone, project, push_config
from .geometry import PlanarPose, Twist, TwistMetric, apply_twist, inverse_transform_point, pose_difference, wrap_angle
from .polygon import point_on_edge_param, point_segment_distance, signed_depth
from .scene import Scene

log = logging.getLogger("motioncones.planner")

_COS_EPS = 1e-9
_TIE_EPS = 1e-12


class InfeasibleStartError(RuntimeError):
    """No pusher admits a motion cone at the initial pose."""


class NoPlanFoundError(RuntimeError):
    """Iterations exhausted; carries the search tree for diagnostics."""

    def __init__(self, message: str, tree: "SearchTree"):
        super().__init__(message)
        self.tree = tree


@dataclass
class PlannerParams:
    step: float = 1.0  # metric units (mm-equivalent)
    goal_tolerance: tuple[float, float, float] = (1.0, 1.0, 1.0)  # mm, mm, deg
    cost_threshold: float | None = None  # derived from the query when None
    same_pusher_cost: float = 0.1
    switch_pusher_cost: float = 1.0
    t_init: float = 1e-4
    t_rate: float = 2.0
    max_fail: int = 10
    rewire_radius: float | None = None  # defaults to 3 * step
    bounds: tuple[tuple[float, float], tuple[float, float], tuple[float, float]] | None = None
    goal_bias: float = 0.05  # probability of sampling the goal pose itself
    seed: int = 0
    max_iterations: int = 30000

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be > 0")

    @classmethod
    def from_scene(cls, scene: Scene, **overrides) -> "PlannerParams":
        o = scene.planner_overrides
        params = cls(
            step=o.get("step_mm", 1.0),
            goal_tolerance=tuple(o.get("goal_tolerance", (1.0, 1.0, 1.0))),
            cost_threshold=o.get("cost_threshold"),
            same_pusher_cost=o.get("same_pusher_cost", 0.1),
            switch_pusher_cost=o.get("switch_pusher_cost", 1.0),
            t_init=o.get("t_init", 1e-4),
            max_fail=o.get("max_fail", 10),
            rewire_radius=o.get("rewire_radius_mm"),
            goal_bias=o.get("goal_bias", 0.05),
            max_iterations=o.get("max_iterations", 30000),
            bounds=_bounds_from_override(o.get("bounds")),
        )
        return replace(params, **overrides) if overrides else params


def _bounds_from_override(raw) -> tuple | None:
    if raw is None:
        return None
    th = raw["theta_deg"]
    return (
        tuple(raw["x"]),
        tuple(raw["z"]),
        (math.radians(th[0]), math.radians(th[1])),
    )


@dataclass
class TreeNode:
    uid: int
    q: PlanarPose
    parent: int | None
    arriving_pusher: str | None
    node_cost: float
    cones: dict[str, MotionCone | None]
    children: list[int] = field(default_factory=list)

    def has_cone(self) -> bool:
        return any(c is not None for c in self.cones.values())


class SearchTree:
    """Node store with vectorized nearest/near queries under the twist metric."""

    def __init__(self, metric: TwistMetric):
        self.metric = metric
        self.nodes: list[TreeNode] = []
        self._coords = np.zeros((256, 3))

    def __len__(self) -> int:
        return len(self.nodes)

    def add(self, q: PlanarPose, parent: int | None, pusher: str | None, cost: float, cones) -> TreeNode:
        uid = len(self.nodes)
        if uid >= self._coords.shape[0]:
            self._coords = np.vstack([self._coords, np.zeros_like(self._coords)])
        self._coords[uid] = (q.x, q.z, q.theta)
        node = TreeNode(uid, q, parent, pusher, cost, cones)
        self.nodes.append(node)
        if parent is not None:
            self.nodes[parent].children.append(uid)
        return node

    def _dist2(self, q: PlanarPose) -> np.ndarray:
        c = self._coords[: len(self.nodes)]
        dth = c[:, 2] - q.theta
        dth -= 2.0 * math.pi * np.round(dth / (2.0 * math.pi))
        return (c[:, 0] - q.x) ** 2 + (c[:, 1] - q.z) ** 2 + (self.metric.length_scale * dth) ** 2

    def nearest(self, q: PlanarPose) -> int:
        return int(np.argmin(self._dist2(q)))

    def near(self, q: PlanarPose, radius: float) -> list[int]:
        return np.flatnonzero(self._dist2(q) <= radius * radius).tolist()

    def contains_pose(self, q: PlanarPose, tol: float = 1e-9) -> bool:
        return bool(np.min(self._dist2(q)) <= tol * tol)

    def path_to_root(self, uid: int) -> list[TreeNode]:
        out = []
        cur: int | None = uid
        while cur is not None:
            node = self.nodes[cur]
            out.append(node)
            cur = node.parent
        return out[::-1]


@dataclass
class TransitionState:
    """Adaptive temperature state of the transition test."""

    temperature: float
    n_fail: int = 0
    cost_sum: float = 0.0
    count: int = 0

    @property
    def cost_average(self) -> float:
        return self.cost_sum / self.count if self.count else 1.0


def transition_test(
    c_parent: float,
    c_child: float,
    state: TransitionState,
    rng: np.random.Generator,
    params: PlannerParams,
) -> bool:
    """Accept downhill moves always; uphill with probability exp(-dc / (K*T)).

    K is the running average configuration cost of tested states. On an
    accepted uphill move the temperature divides by t_rate; each rejection
    multiplies it by t_rate**(1/max_fail). Mutates `state`.
    """
    accept = True
    if c_child > c_parent:
        k = max(state.cost_average, 1e-12)
        p = math.exp(-(c_child - c_parent) / (k * state.temperature))
        if rng.random() < p:
            state.temperature /= params.t_rate
            state.n_fail = 0
        else:
            state.n_fail += 1
            state.temperature *= params.t_rate ** (1.0 / params.max_fail)
            accept = False
    state.cost_sum += c_child
    state.count += 1
    return accept


def grasp_maintained(scene: Scene, q: PlanarPose, pusher_label: str | None = None, margin: float | None = None) -> bool:
    """True iff the finger patch stays on the object (with margin) and the
    edge's pusher points remain within their object face segments."""
    margin = scene.containment_margin if margin is None else margin
    patch = inverse_transform_point(q, scene.grasp_center)
    if signed_depth(scene.polygon, patch) < margin - 1e-9:
        return False
    if pusher_label is not None:
        pusher = scene.pushers[pusher_label]
        faces = scene.pusher_faces[pusher_label]
        n = len(scene.polygon)
        for point, edge in zip(pusher.points, faces):
            a, b = scene.polygon[edge], scene.polygon[(edge + 1) % n]
            if point_segment_distance(point, a, b) > 1e-6:
                return False
            if not -1e-9 <= point_on_edge_param(scene.polygon, edge, point) <= 1.0 + 1e-9:
                return False
    return True


def _unit_scaled(metric: TwistMetric, t: Twist) -> tuple[np.ndarray, float]:
    s = np.array([t.vx, t.vz, metric.length_scale * t.wy])
    n = float(np.linalg.norm(s))
    return s / n, n


def _in_cone(cone: MotionCone | None, s_unit: np.ndarray) -> bool:
    if cone is None:
        return False
    if cone.degenerate:
        return contains(cone, cone.source.metric.unscale(s_unit))
    return float(np.max(cone.facet_normals @ s_unit)) <= 1e-9


def generate_motion_cones(scene: Scene, q: PlanarPose) -> dict[str, MotionCone | None]:
    """Polyhedral motion cone per pusher; None marks an unbalanceable pusher."""
    cones: dict[str, MotionCone | None] = {}
    for label in scene.pusher_labels():
        try:
            cones[label] = polyhedral_cone(push_config(scene, q, label))
        except NoPositiveRootError:
            cones[label] = None
    return cones


def motion_cone_push(
    node: TreeNode,
    q_sample: PlanarPose,
    scene: Scene,
    metric: TwistMetric,
) -> tuple[PlanarPose, str, str, Twist]:
    """Reach as close to q_sample as the parent's motion cones allow.

    Projects the desired body twist onto every pusher cone and keeps the best
    metric cosine; ties prefer the parent's arriving pusher, then the lowest
    pusher index. Returns (q_new, pusher, mode, executed unit twist).
    """
    desired = pose_difference(node.q, q_sample)
    step_len = metric.norm(desired)
    desired = metric.normalize(desired)
    best: tuple[float, str, Twist] | None = None
    for label in scene.pusher_labels():
        cone = node.cones.get(label)
        if cone is None:
            continue
        executed = project(cone, desired)
        cos = metric.cosine(executed, desired)
        if best is None or cos > best[0] + _TIE_EPS:
            best = (cos, label, executed)
        elif abs(cos - best[0]) <= _TIE_EPS and label == node.arriving_pusher and best[1] != node.arriving_pusher:
            best = (cos, label, executed)
    if best is None:
        raise ValueError("parent node has no usable motion cone")
    cos, label, executed = best
    mode = "stick" if cos >= 1.0 - _COS_EPS else "projected"
    return apply_twist(node.q, executed, step_len), label, mode, executed


def _edge_cost(parent_pusher: str | None, edge_pusher: str, params: PlannerParams) -> float:
    return params.same_pusher_cost if parent_pusher == edge_pusher else params.switch_pusher_cost


def _reachable_pushers(node: TreeNode, q_to: PlanarPose, metric: TwistMetric, params: PlannerParams, scene: Scene):
    """Pushers whose cone at `node` contains the one-unit-step twist to q_to."""
    diff = pose_difference(node.q, q_to)
    length = metric.norm(diff)
    if length < 1e-12 or length > params.step * (1.0 + 1e-9):
        return []
    s_unit, _ = _unit_scaled(metric, diff)
    return [label for label in scene.pusher_labels() if _in_cone(node.cones.get(label), s_unit)]


def choose_parent(
    tree: SearchTree,
    q_new: PlanarPose,
    default: tuple[int, str],
    near: list[int],
    params: PlannerParams,
    scene: Scene,
) -> tuple[int, str, float]:
    """Cheapest near node that can reach q_new in one sticking unit step."""
    parent_idx, pusher = default
    parent = tree.nodes[parent_idx]
    best = (parent.node_cost + _edge_cost(parent.arriving_pusher, pusher, params), parent_idx, pusher)
    for idx in near:
        if idx == parent_idx:
            continue
        node = tree.nodes[idx]
        for label in _reachable_pushers(node, q_new, tree.metric, params, scene):
            cost = node.node_cost + _edge_cost(node.arriving_pusher, label, params)
            if cost < best[0] - _TIE_EPS:
                best = (cost, idx, label)
    return best[1], best[2], best[0]


def _recompute_subtree_costs(tree: SearchTree, root_uid: int, params: PlannerParams) -> None:
    stack = [root_uid]
    while stack:
        uid = stack.pop()
        node = tree.nodes[uid]
        for child_uid in node.children:
            child = tree.nodes[child_uid]
            child.node_cost = node.node_cost + _edge_cost(node.arriving_pusher, child.arriving_pusher, params)
            stack.append(child_uid)


def rewire(tree: SearchTree, new_uid: int, near: list[int], params: PlannerParams, scene: Scene) -> None:
    """Re-parent near nodes through the new node when that lowers their cost."""
    new_node = tree.nodes[new_uid]
    for idx in near:
        if idx == new_uid or idx == new_node.parent:
            continue
        target = tree.nodes[idx]
        best_label, best_edge = None, math.inf
        for label in _reachable_pushers(new_node, target.q, tree.metric, params, scene):
            edge = _edge_cost(new_node.arriving_pusher, label, params)
            if edge < best_edge:
                best_label, best_edge = label, edge
        if best_label is None:
            continue
        new_cost = new_node.node_cost + best_edge
        if new_cost < target.node_cost - _TIE_EPS:
            tree.nodes[target.parent].children.remove(idx)
            target.parent = new_uid
            target.arriving_pusher = best_label
            target.node_cost = new_cost
            new_node.children.append(idx)
            _recompute_subtree_costs(tree, idx, params)


@dataclass
class TrajectorySegment:
    pusher: str
    waypoints: list[PlanarPose]  # leading waypoint is the segment's start pose


@dataclass
class Trajectory:
    segments: list[TrajectorySegment]
    cost: float
    switches: int
    seed: int
    iterations: int
    wall_time_s: float

    def final_pose(self) -> PlanarPose:
        return self.segments[-1].waypoints[-1] if self.segments else PlanarPose()

    def to_dict(self) -> dict:
        return {
            "segments": [
                {
                    "pusher": seg.pusher,
                    "waypoints": [[round(w.x, 9), round(w.z, 9), round(math.degrees(w.theta), 9)] for w in seg.waypoints],
                }
                for seg in self.segments
            ],
            "cost": round(self.cost, 9),
            "switches": self.switches,
            "seed": self.seed,
            "iterations": self.iterations,
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        segments = [
            TrajectorySegment(
                pusher=seg["pusher"],
                waypoints=[PlanarPose(w[0], w[1], math.radians(w[2])) for w in seg["waypoints"]],
            )
            for seg in data["segments"]
        ]
        return cls(
            segments=segments,
            cost=data["cost"],
            switches=data["switches"],
            seed=data.get("seed", 0),
            iterations=data.get("iterations", 0),
            wall_time_s=data.get("wall_time_s", 0.0),
        )


@dataclass
class PlanResult:
    trajectory: Trajectory
    tree: SearchTree
    goal_node: int | None


def _within_tolerance(q: PlanarPose, goal: PlanarPose, tol: tuple[float, float, float]) -> bool:
    return (
        abs(q.x - goal.x) <= tol[0]
        and abs(q.z - goal.z) <= tol[1]
        and abs(wrap_angle(q.theta - goal.theta)) <= math.radians(tol[2])
    )


def _auto_bounds(scene: Scene, q_init: PlanarPose, q_goal: PlanarPose, params: PlannerParams):
    xs, zs = scene.polygon[:, 0], scene.polygon[:, 1]
    hx = 0.5 * (xs.max() - xs.min()) + scene.patch_radius
    hz = 0.5 * (zs.max() - zs.min()) + scene.patch_radius
    pad = params.step
    return (
        (min(-hx, q_init.x, q_goal.x) - pad, max(hx, q_init.x, q_goal.x) + pad),
        (min(-hz, q_init.z, q_goal.z) - pad, max(hz, q_init.z, q_goal.z) + pad),
        (
            min(-0.5 * math.pi, q_init.theta, q_goal.theta) - 1e-9,
            max(0.5 * math.pi, q_init.theta, q_goal.theta) + 1e-9,
        ),
    )


def _extract_trajectory(
    tree: SearchTree,
    goal_uid: int,
    q_init: PlanarPose,
    seed: int,
    iterations: int,
    wall_time: float,
) -> Trajectory:
    path = tree.path_to_root(goal_uid)
    segments: list[TrajectorySegment] = []
    switches = 0
    for prev, node in zip(path, path[1:]):
        pusher = node.arriving_pusher
        if segments and segments[-1].pusher == pusher:
            segments[-1].waypoints.append(node.q)
        else:
            if segments:
                switches += 1
            segments.append(TrajectorySegment(pusher, [prev.q, node.q]))
    return Trajectory(
        segments=segments,
        cost=tree.nodes[goal_uid].node_cost,
        switches=switches,
        seed=seed,
        iterations=iterations,
        wall_time_s=wall_time,
    )


def plan(scene: Scene, q_init: PlanarPose, q_goal: PlanarPose, params: PlannerParams | None = None) -> PlanResult:
    """Plan a sequence of stable pushes taking q_init to q_goal.

    Raises InfeasibleStartError when no pusher admits a cone at q_init and
    NoPlanFoundError (with the tree attached) when iterations run out.
    """
    t_start = time.perf_counter()
    if params is None:
        params = PlannerParams.from_scene(scene)
    metric = scene.metric
    radius = params.rewire_radius if params.rewire_radius is not None else 3.0 * params.step
    bounds = params.bounds if params.bounds is not None else _auto_bounds(scene, q_init, q_goal, params)
    goal_dist = metric.distance(q_init, q_goal)
    threshold = params.cost_threshold
    if threshold is None:
        # one engagement + one switch, plus generous slack on unit-step count
        threshold = 2.0 * params.switch_pusher_cost + params.same_pusher_cost * (
            2.0 * math.ceil(goal_dist / params.step) + 20.0
        )

    tree = SearchTree(metric)
    if _within_tolerance(q_init, q_goal, params.goal_tolerance):
        tree.add(q_init, None, None, 0.0, generate_motion_cones(scene, q_init))
        return PlanResult(Trajectory([], 0.0, 0, params.seed, 0, time.perf_counter() - t_start), tree, 0)

    root_cones = generate_motion_cones(scene, q_init)
    if not any(c is not None for c in root_cones.values()):
        raise InfeasibleStartError("no pusher yields a motion cone at the initial pose")
    tree.add(q_init, None, None, 0.0, root_cones)

    rng = np.random.Generator(np.random.PCG64(params.seed))
    state = TransitionState(temperature=params.t_init, cost_sum=goal_dist, count=1)
    goal_nodes: list[int] = []

    def cfg_cost(q: PlanarPose) -> float:
        return metric.distance(q, q_goal)

    iterations = 0
    stats = {k: 0 for k in ("dead_parent", "dup_sample", "reject_sample", "reject_new", "grasp_lost", "dup_new", "insert")}
    for iterations in range(1, params.max_iterations + 1):
        if rng.random() < params.goal_bias:
            q_rand = q_goal
        else:
            q_rand = PlanarPose(
                rng.uniform(*bounds[0]),
                rng.uniform(*bounds[1]),
                rng.uniform(*bounds[2]),
            )
        parent_idx = tree.nearest(q_rand)
        parent = tree.nodes[parent_idx]
        if not parent.has_cone():
            stats["dead_parent"] += 1
            continue
        dist = metric.distance(parent.q, q_rand)
        if dist < 1e-12:
            continue
        step_len = min(params.step, dist)
        q_sample = apply_twist(parent.q, metric.normalize(pose_difference(parent.q, q_rand)), step_len)
        if tree.contains_pose(q_sample):
            stats["dup_sample"] += 1
            continue
        if not transition_test(cfg_cost(parent.q), cfg_cost(q_sample), state, rng, params):
            stats["reject_sample"] += 1
            continue
        q_new, pusher, mode, _ = motion_cone_push(parent, q_sample, scene, metric)
        if not transition_test(cfg_cost(parent.q), cfg_cost(q_new), state, rng, params):
            stats["reject_new"] += 1
            continue
        if not grasp_maintained(scene, q_new, pusher):
            stats["grasp_lost"] += 1
            continue
        if tree.contains_pose(q_new):
            stats["dup_new"] += 1
            continue
        stats["insert"] += 1
        near = tree.near(q_new, radius)
        best_parent, best_pusher, best_cost = choose_parent(tree, q_new, (parent_idx, pusher), near, params, scene)
        node = tree.add(q_new, best_parent, best_pusher, best_cost, generate_motion_cones(scene, q_new))
        rewire(tree, node.uid, near, params, scene)
        if _within_tolerance(q_new, q_goal, params.goal_tolerance):
            goal_nodes.append(node.uid)
        log.debug(
            "iter=%d nodes=%d mode=%s pusher=%s cost=%.3f goal_dist=%.3f",
            iterations, len(tree), mode, best_pusher, best_cost, cfg_cost(q_new),
        )
        if goal_nodes:
            best_goal = min(goal_nodes, key=lambda u: tree.nodes[u].node_cost)
            if tree.nodes[best_goal].node_cost <= threshold:
                wall = time.perf_counter() - t_start
                traj = _extract_trajectory(tree, best_goal, q_init, params.seed, iterations, wall)
                return PlanResult(traj, tree, best_goal)

    raise NoPlanFoundError(
        f"no plan within {params.max_iterations} iterations (tree size {len(tree)}, gates {stats})", tree
    )
