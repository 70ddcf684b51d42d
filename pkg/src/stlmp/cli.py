"""Command line: plan, execute, and check.

Exit codes: 0 = specification satisfied, 1 = planning/execution failure,
2 = input error.  All configuration comes from flags and the scenario file;
no environment variables are consulted, so runs are reproducible.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .executor import ExecutionError, execute
from .pipeline import estimator_cache_path, prepare_policies
from .planner import PlanningError, plan
from .primitives import NoiseSpec
from .serialize import RunReport, read_plan_csv, read_trace_csv, write_plan_csv, write_trace_csv
from .stl import EvaluationError, StlError, robustness, parse_formula
from .svg import render_svg
from .world import Scenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_UNSATISFIED = 1
EXIT_INPUT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stlmp",
                                     description="Temporal-logic motion planning with "
                                                 "velocity-limited motion primitives")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario file (.scn)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the file)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--iterations", type=int, default=None,
                        help="sampling iterations (overrides the file)")
    common.add_argument("--runs", type=int, default=1,
                        help="fan out N independent seeded runs on worker threads")
    common.add_argument("--refit-estimators", action="store_true",
                        help="ignore any cached estimator table and refit")

    p_plan = sub.add_parser("plan", parents=[common], help="plan a trajectory")
    p_plan.set_defaults(func=_cmd_plan)

    p_exec = sub.add_parser("execute", parents=[common],
                            help="run a plan closed-loop on the simulated robot")
    p_exec.add_argument("--plan", default=None, help="plan CSV to execute (default: plan fresh)")
    p_exec.add_argument("--noise-pos", type=float, default=0.0,
                        help="position noise intensity (m/sqrt(s))")
    p_exec.add_argument("--noise-ang", type=float, default=0.0,
                        help="heading noise intensity (rad/sqrt(s))")
    p_exec.set_defaults(func=_cmd_execute)

    p_check = sub.add_parser("check", help="print the robustness of a trace against a formula")
    p_check.add_argument("formula", help="formula in the concrete syntax")
    p_check.add_argument("trace", help="trace or plan CSV")
    p_check.set_defaults(func=_cmd_check)
    return parser


def _seeded_out(base: Path, seed: int, runs: int) -> Path:
    return base if runs == 1 else base / f"run_{seed}"


def _single_plan(scenario_path: Path, scenario: Scenario, seed: int, out_dir: Path,
                 iterations: int | None, refit: bool) -> RunReport:
    out_dir.mkdir(parents=True, exist_ok=True)
    policies, estimators, d_range = prepare_policies(
        scenario, estimator_cache_path(scenario_path), refit)
    started = time.perf_counter()
    result = plan(scenario, policies, estimators, d_range, seed=seed,
                  max_iteration=iterations)
    wall = time.perf_counter() - started
    csv_path = out_dir / "plan.csv"
    svg_path = out_dir / "plan.svg"
    write_plan_csv(csv_path, result)
    render_svg(svg_path, scenario, [("planned", "#e07a00", result.trajectory)],
               title=f"{scenario.name} (seed {seed})")
    report = RunReport(scenario=scenario.name, seed=seed, wall_time_s=wall,
                       iterations=result.iterations, plan_robustness=result.robustness,
                       outputs={"plan_csv": str(csv_path), "plan_svg": str(svg_path)})
    report.write(out_dir / "report.json")
    report.outputs["report"] = str(out_dir / "report.json")
    return report


def _cmd_plan(args) -> int:
    scenario_path = Path(args.scenario)
    scenario = load_scenario(scenario_path)
    base_seed = args.seed if args.seed is not None else scenario.planner.seed
    out_base = Path(args.out)

    def run(i: int):
        seed = base_seed + i
        try:
            report = _single_plan(scenario_path, scenario, seed,
                                  _seeded_out(out_base, seed, args.runs),
                                  args.iterations, args.refit_estimators)
            return seed, report, None
        except PlanningError as err:
            return seed, None, err

    if args.runs == 1:
        outcomes = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=min(args.runs, 8)) as pool:
            outcomes = list(pool.map(run, range(args.runs)))

    status = EXIT_OK
    for seed, report, err in outcomes:
        if err is not None:
            print(f"[{scenario.name}] seed {seed}: PLANNING FAILED ({err})")
            status = EXIT_UNSATISFIED
        else:
            print(f"[{scenario.name}] seed {seed}: robustness {report.plan_robustness:.6f} "
                  f"in {report.wall_time_s:.2f}s -> {report.outputs['plan_csv']}")
            if report.plan_robustness < 0.0:
                status = EXIT_UNSATISFIED
    return status


def _cmd_execute(args) -> int:
    scenario_path = Path(args.scenario)
    scenario = load_scenario(scenario_path)
    base_seed = args.seed if args.seed is not None else scenario.planner.seed
    out_base = Path(args.out)
    noise = NoiseSpec(pos_std=args.noise_pos, ang_std=args.noise_ang)
    policies, estimators, d_range = prepare_policies(
        scenario, estimator_cache_path(scenario_path), args.refit_estimators)

    def run(i: int):
        seed = base_seed + i
        out_dir = _seeded_out(out_base, seed, args.runs)
        out_dir.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(seed)
        started = time.perf_counter()
        try:
            if args.plan:
                plan_result = read_plan_csv(args.plan, policies).as_result()
                plan_rho = None
            else:
                plan_result = plan(scenario, policies, estimators, d_range, rng=rng,
                                   max_iteration=args.iterations)
                plan_rho = plan_result.robustness
            trace = execute(plan_result, scenario, policies, estimators, d_range,
                            noise=noise if noise.enabled else None, rng=rng)
        except (PlanningError, ExecutionError) as err:
            return seed, None, err, time.perf_counter() - started
        wall = time.perf_counter() - started
        trace_path = out_dir / "trace.csv"
        svg_path = out_dir / "execution.svg"
        write_trace_csv(trace_path, trace.trajectory, trace.events)
        render_svg(svg_path, scenario,
                   [("planned", "#e07a00", plan_result.trajectory),
                    ("actual", "#1f5fbf", trace.trajectory)],
                   title=f"{scenario.name} (seed {seed})")
        report = RunReport(scenario=scenario.name, seed=seed, wall_time_s=wall,
                           iterations=getattr(plan_result, "iterations", 0),
                           plan_robustness=plan_rho,
                           executed_robustness=trace.final_robustness,
                           replans=trace.replans,
                           outputs={"trace_csv": str(trace_path), "svg": str(svg_path)})
        report.write(out_dir / "report.json")
        return seed, report, None, wall

    if args.runs == 1:
        outcomes = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=min(args.runs, 8)) as pool:
            outcomes = list(pool.map(run, range(args.runs)))

    status = EXIT_OK
    for seed, report, err, wall in outcomes:
        if err is not None:
            print(f"[{scenario.name}] seed {seed}: EXECUTION FAILED after {wall:.2f}s ({err})")
            status = EXIT_UNSATISFIED
        else:
            print(f"[{scenario.name}] seed {seed}: executed robustness "
                  f"{report.executed_robustness:.6f}, {report.replans} replans "
                  f"-> {report.outputs['trace_csv']}")
            if report.executed_robustness < 0.0:
                status = EXIT_UNSATISFIED
    return status


def _cmd_check(args) -> int:
    formula = parse_formula(args.formula)
    trace = read_trace_csv(args.trace)
    # finite optimism bound: the diagonal of the trace's own bounding box
    span = trace.positions.max(axis=0) - trace.positions.min(axis=0)
    rho_opt = max(1.0, float(np.linalg.norm(span)))
    from .stl import EvalSettings
    value = robustness(formula, trace, settings=EvalSettings(rho_opt=rho_opt))
    print(f"{value:.9f}")
    return EXIT_OK if value >= 0.0 else EXIT_UNSATISFIED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, StlError, EvaluationError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
