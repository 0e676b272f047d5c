"""Command-line entry point: ``rlrrt <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dynamics import ROBOTS
from .world import GoalSpec, LidarConfig

log = logging.getLogger("rlrrt")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _outdir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _add_common(p, robot=True, map_default="training"):
    p.add_argument("--seed", type=int, default=0)
    if robot:
        p.add_argument("--robot", choices=sorted(ROBOTS), default="diff_drive")
    if map_default is not None:
        p.add_argument("--map", default=map_default, help="bundled map name or map file path")


# ---------------------------------------------------------------- subcommands


def cmd_train_policy(args):
    from .maps import resolve_map
    from .policy import ActorCriticConfig, train_actor_critic
    from .policy.rollout import EpisodeConfig

    grid = resolve_map(args.map)
    ep = EpisodeConfig(max_episode_time=ROBOTS[args.robot].t_horizon, goal_sample_radius=args.goal_radius)
    cfg = ActorCriticConfig(total_steps=args.steps, seed=args.seed, episode=ep, eval_episodes=args.eval_episodes)
    policy, report = train_actor_critic(args.robot, grid, cfg=cfg)
    policy.save(args.out, {"train_config": cfg.to_dict(), "success_rate": report.success_rate})
    print(f"success {report.success_rate:.2f} vs random {report.random_success_rate:.2f}; saved {args.out}")


def cmd_collect_ttr(args):
    from .estimator import TTRConfig, collect_training_data
    from .maps import resolve_map
    from .policy import load_policy

    grid = resolve_map(args.map)
    cfg = TTRConfig.for_robot(args.robot, n_episodes=args.episodes, goal_sample_radius=args.goal_radius)
    policy = load_policy(args.policy, args.robot)
    ds = collect_training_data(policy, grid, cfg, np.random.default_rng(args.seed))
    ds.header["seed"] = args.seed
    ds.save(args.out)
    print(f"{len(ds)} samples from {args.episodes} episodes ({ds.reached.mean():.1%} from reaching episodes)")


def cmd_train_estimator(args):
    from .bench.figures import plot_training_losses
    from .estimator import TTRDataset, train_estimator
    from .neuralnet import TrainConfig

    ds = TTRDataset.load(args.data)
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs, seed=args.seed)
    est, report = train_estimator(ds, cfg)
    est.save(args.out)
    print(report.holdout.table(ds.header.get("robot_kind", "")))
    stem = Path(args.out)
    Path(f"{stem}.report.json").write_text(json.dumps(report.as_dict(), indent=1))
    plot_training_losses(report.train_losses, f"{stem}.losses.png")


def _planner_cfg(args, kind):
    from .planner import PlannerConfig, SstConfig

    limits = {"time_budget": args.budget, "max_iterations": args.iterations}
    if args.planner == "sst":
        return SstConfig(**limits)
    return PlannerConfig(p_goal_bias=args.goal_bias, k_c=args.k_c, p_prune=args.p_prune, dt_tree=args.dt_tree,
                         **limits)


def cmd_plan(args):
    from .bench.render import render_svg
    from .estimator import ReachabilityEstimator
    from .maps import resolve_map
    from .planner import rl_rrt, rl_rrt_euclidean, rrt_steer_plan, sst_plan
    from .policy import load_policy

    grid = resolve_map(args.map)
    start = ROBOTS[args.robot].state_at(*(_floats(args.start) + (0.0,))[:3])
    goal = GoalSpec(_floats(args.goal)[:2], args.goal_radius)
    cfg = _planner_cfg(args, args.robot)
    if args.planner == "sst":
        res = sst_plan(grid, start, goal, args.robot, cfg, seed=args.seed)
    elif args.planner in ("rrt_dw", "rrt_s"):
        res = rrt_steer_plan(grid, start, goal, "dwa" if args.planner == "rrt_dw" else "dwa_no_clearance", cfg,
                             seed=args.seed)
    else:
        policy = load_policy(args.policy, args.robot)
        if args.planner == "rl_rrt":
            if not args.estimator:
                sys.exit("rl_rrt needs --estimator")
            res = rl_rrt(grid, start, goal, policy, ReachabilityEstimator.load(args.estimator), cfg, seed=args.seed)
        else:
            res = rl_rrt_euclidean(grid, start, goal, policy, None, cfg, seed=args.seed)
    out = _outdir(args.out)
    (out / "report.json").write_text(json.dumps(res.report(), indent=1))
    (out / "tree.json").write_text(json.dumps(res.tree.dump()))
    if res.plan is not None:
        (out / "plan.json").write_text(res.plan.to_json())
    render_svg(grid, {res.planner: res.tree}, {res.planner: res.plan} if res.plan else {}, out / "plan.svg",
               start=(start.x, start.y), goal=goal)
    print(json.dumps(res.report()))
    return 0 if res.success else 1


def cmd_bench(args):
    from .bench.experiment import load_config, parse_config_text, run_experiment, summarize
    from .bench.figures import plot_benchmark

    overrides = {"trials": args.trials, "estimator": args.estimator, "seed_base": args.seed}
    cfg = load_config(args.config, **overrides) if args.config else parse_config_text("", **overrides)
    out = _outdir(args.out)
    result = run_experiment(cfg, out, log=print if args.verbose else None)
    summary = summarize(result.records, cfg.budgets)
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    unit = "planning budget (s)" if cfg.budget_mode == "wall" else "planning budget (iterations)"
    plot_benchmark(result.records, cfg.budgets, out / "benchmark.png", unit)
    for name, s in summary.items():
        print(f"{name:10s} success {s['success_rate']:.2f}  median finish {s['median_finish_time']:.1f} s")


def cmd_contour(args):
    from .bench.diagnostics import ttr_contour
    from .bench.figures import plot_contour, plot_ttr_scatter
    from .estimator import ReachabilityEstimator, RolloutTTROracle, TTRConfig
    from .maps import resolve_map
    from .policy import load_policy

    grid = resolve_map(args.map)
    goal = _floats(args.goal)[:2]
    out = _outdir(args.out)
    fields = {}
    if args.estimator:
        est = ReachabilityEstimator.load(args.estimator)
        fields["predicted"] = ttr_contour(est, grid, goal, args.step, theta=0.0)
    if args.oracle:
        policy = load_policy(args.oracle, args.robot)
        oracle = RolloutTTROracle(policy, grid, TTRConfig.for_robot(args.robot))
        fields["oracle"] = ttr_contour(oracle, grid, goal, args.step, theta=0.0)
    if not fields:
        sys.exit("give --estimator and/or --oracle")
    for name, f in fields.items():
        f.write_csv(out / f"{name}.csv")
        plot_contour(f, grid, out / f"{name}.png", title=name)
    if len(fields) == 2:
        p, o = fields["predicted"].values.ravel(), fields["oracle"].values.ravel()
        ok = np.isfinite(p) & np.isfinite(o)
        plot_ttr_scatter(p[ok], o[ok], out / "scatter.png", fields["oracle"].threshold)
    print(f"wrote {', '.join(fields)} fields to {out}")


def cmd_render(args):
    from .bench.render import render_svg
    from .maps import resolve_map
    from .planner import MotionPlan

    grid = resolve_map(args.map)
    plans = {Path(p).stem: MotionPlan.from_json(Path(p).read_text()) for p in args.plan}
    trees = {Path(t).stem: json.loads(Path(t).read_text()) for t in args.tree}
    goal = GoalSpec(_floats(args.goal)[:2]) if args.goal else None
    start = _floats(args.start)[:2] if args.start else None
    render_svg(grid, trees, plans, args.out, start=start, goal=goal)
    print(f"wrote {args.out}")


def cmd_p2p_eval(args):
    from .bench.diagnostics import p2p_success_by_distance, write_bins_csv
    from .bench.figures import plot_p2p
    from .maps import resolve_map
    from .policy import load_policy

    grid = resolve_map(args.map)
    policy = load_policy(args.policy, args.robot)
    bins = p2p_success_by_distance(policy, grid, list(_floats(args.bins)), args.trials,
                                   np.random.default_rng(args.seed))
    out = _outdir(args.out)
    write_bins_csv(bins, out / "p2p.csv")
    plot_p2p(bins, out / "p2p.png")
    for b in bins:
        print(f"[{b.low:g}, {b.high:g}) m: {b.rate:.2f} over {b.trials}")


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rlrrt", description="RL-RRT planning and evaluation tools")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-policy", help="train an actor-critic P2P policy")
    _add_common(p)
    p.add_argument("--steps", type=int, default=40_000)
    p.add_argument("--goal-radius", type=float, default=10.0)
    p.add_argument("--eval-episodes", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_policy)

    p = sub.add_parser("collect-ttr", help="roll out a policy and save a labeled TTR dataset")
    _add_common(p)
    p.add_argument("--policy", default="dwa", help="dwa, dwa_no_clearance, scripted or a checkpoint path")
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--goal-radius", type=float, default=20.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collect_ttr)

    p = sub.add_parser("train-estimator", help="fit the reachability estimator on a dataset")
    _add_common(p, robot=False, map_default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_estimator)

    p = sub.add_parser("plan", help="solve one planning query")
    _add_common(p, map_default="corridor")
    p.add_argument("--planner", choices=("rl_rrt", "rl_rrt_e", "sst", "rrt_dw", "rrt_s"), default="rl_rrt")
    p.add_argument("--start", required=True, help="x,y[,theta]")
    p.add_argument("--goal", required=True, help="x,y")
    p.add_argument("--goal-radius", type=float, default=0.5)
    p.add_argument("--policy", default="dwa")
    p.add_argument("--estimator")
    p.add_argument("--budget", type=float, default=10.0, help="wall-clock seconds")
    p.add_argument("--iterations", type=int, help="iteration budget (deterministic)")
    p.add_argument("--goal-bias", type=float, default=0.05)
    p.add_argument("--k-c", type=int, default=20)
    p.add_argument("--p-prune", type=float, default=0.9)
    p.add_argument("--dt-tree", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run a seeded planner comparison")
    p.add_argument("--config", help="key = value experiment file")
    p.add_argument("--trials", type=int)
    p.add_argument("--estimator")
    p.add_argument("--seed", type=int, help="seed base (trial i uses seed + i)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("contour", help="TTR field over the map, predicted and/or rollout ground truth")
    _add_common(p)
    p.add_argument("--goal", required=True)
    p.add_argument("--estimator")
    p.add_argument("--oracle", help="policy used for ground-truth rollouts")
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_contour)

    p = sub.add_parser("render", help="draw plans and trees as SVG")
    _add_common(p, robot=False, map_default="corridor")
    p.add_argument("--plan", action="append", default=[])
    p.add_argument("--tree", action="append", default=[])
    p.add_argument("--start")
    p.add_argument("--goal")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("p2p-eval", help="P2P policy success rate by goal distance")
    _add_common(p)
    p.add_argument("--policy", default="dwa")
    p.add_argument("--bins", default="0,0.5,2.5,5,7.5,10")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_p2p_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args) or 0


if __name__ == "__main__":
    sys.exit(main())
