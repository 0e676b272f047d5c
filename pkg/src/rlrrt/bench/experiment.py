"""Seeded planner trials, CSV records and success-rate curves."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dynamics import ROBOTS, DIFF_DRIVE
from ..estimator import ReachabilityEstimator
from ..maps import map_file
from ..planner import PlannerConfig, SstConfig, rl_rrt, rl_rrt_euclidean, rrt_steer_plan, sst_plan
from ..planner.tree import validate_plan
from ..policy import load_policy
from ..policy.actor_critic import sample_start_goal
from ..world import GoalSpec, load_map

PLANNER_NAMES = ("rl_rrt", "rl_rrt_e", "sst", "rrt_dw", "rrt_s")
BUDGET_MODES = ("wall", "iterations")
SCRIPTED = ("dwa", "dwa_no_clearance", "scripted")


@dataclass
class ExperimentConfig:
    map: str = "corridor"
    robot: str = DIFF_DRIVE
    planners: tuple = ("rl_rrt", "sst")
    trials: int = 50
    budgets: tuple = (1.0, 2.0, 4.0, 8.0)
    budget_mode: str = "wall"
    start: tuple | None = None
    goal: tuple | None = None
    goal_sample_radius: float = 20.0
    goal_radius: float = 0.5
    seed_base: int = 0
    policy: str = "dwa"
    estimator: str | None = None
    p_goal_bias: float = 0.05
    k_c: int = 20
    p_prune: float = 0.9
    dt_tree: float = 1.0
    sst_delta_bn: float = 2.0
    sst_delta_s: float = 0.5

    def __post_init__(self):
        self.planners = tuple(self.planners)
        self.budgets = tuple(float(b) for b in self.budgets)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.budgets or list(self.budgets) != sorted(self.budgets):
            raise ValueError("budgets must be non-empty and ascending")
        if self.budget_mode not in BUDGET_MODES:
            raise ValueError(f"budget_mode must be one of {BUDGET_MODES}")
        unknown = set(self.planners) - set(PLANNER_NAMES)
        if unknown:
            raise ValueError(f"unknown planners {sorted(unknown)}")
        if self.robot not in ROBOTS:
            raise ValueError(f"unknown robot {self.robot!r}")
        if (self.start is None) != (self.goal is None):
            raise ValueError("give both start and goal, or neither")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _parse_value(text: str, default):
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple) or default is None and "," in text:
        items = [t.strip() for t in text.split(",") if t.strip()]
        try:
            return tuple(float(t) for t in items)
        except ValueError:
            return tuple(items)
    return text


def parse_config_text(text: str, **overrides) -> ExperimentConfig:
    """``key = value`` lines (``#`` comments, comma-separated lists) into an ExperimentConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string("[experiment]\n" + text)
    defaults = ExperimentConfig()
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    kw = {}
    for key, value in cp["experiment"].items():
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        kw[key] = _parse_value(value, getattr(defaults, key))
    if "planners" in kw and isinstance(kw["planners"], str):
        kw["planners"] = (kw["planners"],)
    if "budgets" in kw and isinstance(kw["budgets"], float):
        kw["budgets"] = (kw["budgets"],)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(), **overrides)


# ---------------------------------------------------------------- records


@dataclass
class TrialRecord:
    planner: str
    seed: int
    success: bool
    wall_time_to_first_solution: float | None
    finish_time: float | None
    tree_size: int
    samples: int
    pruned: int

    def __post_init__(self):
        if self.success and self.finish_time is None:
            raise ValueError("a successful trial needs a finish time")


RECORD_FIELDS = [f.name for f in dataclasses.fields(TrialRecord)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(round(v, 9))
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        opt = lambda s: float(s) if s != "" else None
        out.append(TrialRecord(row["planner"], int(row["seed"]), row["success"] == "1",
                               opt(row["wall_time_to_first_solution"]), opt(row["finish_time"]),
                               int(row["tree_size"]), int(row["samples"]), int(row["pruned"])))
    return out


def write_records(records, path) -> None:
    Path(path).write_text(records_to_csv(records))


def read_records(path) -> list[TrialRecord]:
    return records_from_csv(Path(path).read_text())


# ---------------------------------------------------------------- running


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    results: list = field(default_factory=list)
    queries: list = field(default_factory=list)


def check_artifacts(cfg: ExperimentConfig) -> None:
    """Raise before any trial runs if a referenced file is missing."""
    missing = []
    if not map_file(cfg.map).exists():
        missing.append(f"map {cfg.map}")
    needs_policy = any(p in ("rl_rrt", "rl_rrt_e") for p in cfg.planners)
    if needs_policy and cfg.policy not in SCRIPTED and not Path(cfg.policy).exists():
        missing.append(f"policy checkpoint {cfg.policy}")
    if "rl_rrt" in cfg.planners and (cfg.estimator is None or not Path(cfg.estimator).exists()):
        missing.append(f"estimator {cfg.estimator}")
    if missing:
        raise FileNotFoundError("missing artifacts: " + ", ".join(missing))


def trial_query(cfg: ExperimentConfig, grid, seed: int):
    """Start state and goal for one trial; identical for every planner."""
    spec = ROBOTS[cfg.robot]
    if cfg.start is not None:
        s = tuple(cfg.start) + (0.0,) * (3 - len(cfg.start))
        return spec.state_at(*s[:3]), GoalSpec(tuple(cfg.goal[:2]), cfg.goal_radius)
    rng = np.random.default_rng([cfg.seed_base, seed])
    return sample_start_goal(grid, cfg.robot, cfg.goal_sample_radius, rng, cfg.goal_radius)


def run_planner(name: str, grid, start, goal, cfg: ExperimentConfig, seed: int, policy=None, estimator=None):
    budget = cfg.budgets[-1]
    wall = cfg.budget_mode == "wall"
    limits = {"time_budget": budget if wall else None, "max_iterations": None if wall else int(budget)}
    if name == "sst":
        scfg = SstConfig(delta_bn=cfg.sst_delta_bn, delta_s=cfg.sst_delta_s, p_goal_bias=cfg.p_goal_bias, **limits)
        return sst_plan(grid, start, goal, cfg.robot, scfg, seed=seed)
    pcfg = PlannerConfig(p_goal_bias=cfg.p_goal_bias, k_c=cfg.k_c, p_prune=cfg.p_prune, dt_tree=cfg.dt_tree,
                         reach_radius=cfg.goal_radius, **limits)
    if name == "rl_rrt":
        return rl_rrt(grid, start, goal, policy, estimator, pcfg, seed=seed)
    if name == "rl_rrt_e":
        return rl_rrt_euclidean(grid, start, goal, policy, None, pcfg, seed=seed)
    return rrt_steer_plan(grid, start, goal, "dwa" if name == "rrt_dw" else "dwa_no_clearance", pcfg, seed=seed)


def record_of(res, seed: int, budget_mode: str) -> TrialRecord:
    if budget_mode == "wall":
        t = res.time_to_solution
    else:
        t = float(res.solution_iteration) if res.success else None
    return TrialRecord(res.planner, seed, res.success, t, res.finish_time, res.tree_size, res.samples, res.pruned)


def run_experiment(cfg: ExperimentConfig, out_dir=None, keep_results: bool = False, log=None) -> ExperimentResult:
    """Run every planner for ``cfg.trials`` seeds (``seed_base + i``); optionally persist CSV and plans."""
    check_artifacts(cfg)
    grid = load_map(map_file(cfg.map))
    policy = None
    if any(p in ("rl_rrt", "rl_rrt_e") for p in cfg.planners):
        policy = load_policy(cfg.policy, cfg.robot)
    estimator = ReachabilityEstimator.load(cfg.estimator) if "rl_rrt" in cfg.planners else None
    out = ExperimentResult(cfg, [])
    out.queries = [trial_query(cfg, grid, cfg.seed_base + i) for i in range(cfg.trials)]
    plan_dir = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        plan_dir = out_dir / "plans"
        plan_dir.mkdir(parents=True, exist_ok=True)
    for name in cfg.planners:
        for i in range(cfg.trials):
            seed = cfg.seed_base + i
            start, goal = out.queries[i]
            res = run_planner(name, grid, start, goal, cfg, seed, policy, estimator)
            rec = record_of(res, seed, cfg.budget_mode)
            out.records.append(rec)
            if keep_results:
                out.results.append(res)
            if plan_dir is not None and res.plan is not None:
                (plan_dir / f"{name}_{seed}.json").write_text(res.plan.to_json())
            if log is not None:
                log(f"{name} seed={seed} success={rec.success} t={_fmt(rec.wall_time_to_first_solution)} "
                    f"finish={_fmt(rec.finish_time)} tree={rec.tree_size}")
    if out_dir is not None:
        write_records(out.records, out_dir / "records.csv")
        (out_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True))
    return out


def check_plans(result: ExperimentResult, grid) -> list[str]:
    """Replay every successful plan; returns the problems found."""
    problems = []
    for res in result.results:
        if res.plan is None:
            continue
        _, goal = result.queries[res.plan.seed - result.config.seed_base]
        problems += [f"{res.planner} seed {res.plan.seed}: {p}" for p in validate_plan(res.plan, grid, goal)]
    return problems


# ---------------------------------------------------------------- summaries


def success_curve(records, budgets) -> dict:
    """Per planner, fraction of trials solved within each budget."""
    if not records:
        raise ValueError("no records")
    out = {}
    for name in dict.fromkeys(r.planner for r in records):
        rs = [r for r in records if r.planner == name]
        times = [r.wall_time_to_first_solution for r in rs if r.success]
        out[name] = [sum(t <= b for t in times) / len(rs) for b in budgets]
    return out


def finish_times(records) -> dict:
    out = {}
    for r in records:
        out.setdefault(r.planner, [])
        if r.success:
            out[r.planner].append(r.finish_time)
    return out


def summarize(records, budgets) -> dict:
    curve = success_curve(records, budgets)
    ft = finish_times(records)
    out = {}
    for name, fr in curve.items():
        rs = [r for r in records if r.planner == name]
        f = ft.get(name, [])
        out[name] = {
            "trials": len(rs),
            "success_rate": sum(r.success for r in rs) / len(rs),
            "success_curve": dict(zip([float(b) for b in budgets], fr)),
            "median_finish_time": float(np.median(f)) if f else math.nan,
            "median_time_to_solution": float(np.median([r.wall_time_to_first_solution for r in rs if r.success]))
            if f else math.nan,
            "mean_tree_size": float(np.mean([r.tree_size for r in rs])),
        }
    return out
