"""End-to-end helpers shared by the command line and the test suites."""
from __future__ import annotations

from pathlib import Path

from .planner import PlanResult, plan
from .primitives import Policy, get_model, policy_library
from .reach import ReachEstimator, build_estimators, compute_distance_range, load_estimators, \
    save_estimators
from .world import Scenario


def estimator_cache_path(scenario_path: str | Path) -> Path:
    scenario_path = Path(scenario_path)
    return scenario_path.with_name(scenario_path.stem + ".estimators.tsv")


def prepare_policies(scenario: Scenario, cache: Path | None = None, refit: bool = False
                     ) -> tuple[list[Policy], dict[str, ReachEstimator], tuple[float, float]]:
    """Policy library plus (cached) estimators and the shared edge-length range."""
    policies = policy_library(scenario.robot_model, scenario.policy_levels)
    estimators = None
    if cache is not None and cache.is_file() and not refit:
        loaded = load_estimators(cache)
        if set(loaded) == {p.id for p in policies}:
            estimators = loaded
    if estimators is None:
        estimators = build_estimators(policies, get_model(scenario.robot_model))
        if cache is not None:
            try:
                save_estimators(cache, estimators)
            except OSError:
                pass  # read-only scenario location: run without the cache
    d_range = compute_distance_range(estimators.values())
    return policies, estimators, d_range


def plan_scenario(scenario: Scenario, seed: int | None = None,
                  max_iteration: int | None = None,
                  cache: Path | None = None, refit: bool = False) -> PlanResult:
    policies, estimators, d_range = prepare_policies(scenario, cache, refit)
    return plan(scenario, policies, estimators, d_range, seed=seed,
                max_iteration=max_iteration)
