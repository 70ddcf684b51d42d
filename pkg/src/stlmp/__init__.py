"""Motion planning for signal-temporal-logic tasks on robots with unknown
dynamics, built from velocity-limited motion primitives, fitted
displacement-to-duration estimators, and a robustness-maximizing
spatio-temporal sampling tree."""

from .executor import ExecutionError, ExecutionTrace, execute
from .pipeline import plan_scenario, prepare_policies
from .planner import PlanningError, PlanResult, plan
from .primitives import NoiseSpec, Policy, PrimitiveKind, RobotModel, get_model, \
    policy_library, rollout
from .reach import ReachEstimator, ReachSample, build_estimators, collect_samples, \
    compute_distance_range, fit_estimator, predict_duration
from .stl import EvalSettings, parse_formula, prefix_robustness, robustness
from .trajectory import TimedTrajectory
from .world import Obstacle, Scenario, Workspace, edge_free, load_scenario, point_free

__version__ = "0.1.0"

__all__ = [
    "ExecutionError", "ExecutionTrace", "execute", "plan_scenario", "prepare_policies",
    "PlanningError", "PlanResult", "plan", "NoiseSpec", "Policy", "PrimitiveKind",
    "RobotModel", "get_model", "policy_library", "rollout", "ReachEstimator",
    "ReachSample", "build_estimators", "collect_samples", "compute_distance_range",
    "fit_estimator", "predict_duration", "EvalSettings", "parse_formula",
    "prefix_robustness", "robustness", "TimedTrajectory", "Obstacle", "Scenario",
    "Workspace", "edge_free", "load_scenario", "point_free", "__version__",
]
