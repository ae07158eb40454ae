"""Motion cones for planar frictional pushing under gravity, and a
sampling-based planner for in-hand regrasping by prehensile pushes."""

from .contacts import (
    LimitSurfaceModel,
    PusherContact,
    WrenchCone,
    friction_cone_edges,
    generalized_friction_cone,
    twist_from_wrench,
    wrench_from_twist,
)
from .cones import (
    HypothesisViolatedError,
    MotionCone,
    NoPositiveRootError,
    PushConfig,
    boundary_angle,
    contains,
    gravity_free_cone,
    is_stable_push,
    min_grasp_force,
    polyhedral_cone,
    project,
    push_config,
    solve_grasp_wrench,
)
from .dynamics import (
    ConeUnavailableError,
    PushOutcome,
    ValidationReport,
    brute_force_cone_oracle,
    classify_push,
    max_boundary_deviation,
    monte_carlo_validation,
    propagate,
)
from .geometry import (
    ContactFrame,
    PlanarPose,
    Twist,
    TwistMetric,
    Wrench,
    apply_twist,
    compose,
    inverse,
    pose_difference,
    twist_jacobian,
    wrap_angle,
    wrench_transform,
)
from .planner import (
    InfeasibleStartError,
    NoPlanFoundError,
    PlannerParams,
    PlanResult,
    Trajectory,
    grasp_maintained,
    plan,
    transition_test,
)
from .scene import Scene, SceneError, bundled_scene_path, emit_scene, parse_scene

__version__ = "0.1.0"
