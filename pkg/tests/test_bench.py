import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import sealed_room_grid, walled_grid
from rlrrt.bench import (
    ExperimentConfig,
    TrialRecord,
    check_plans,
    critic_vs_ttr_report,
    decreasing_fraction,
    p2p_success_by_distance,
    parse_config_text,
    read_records,
    records_from_csv,
    records_to_csv,
    render_svg,
    run_experiment,
    success_curve,
    summarize,
    ttr_contour,
)
from rlrrt.bench.figures import plot_benchmark
from rlrrt.dynamics import DiffDriveState
from rlrrt.estimator import RolloutTTROracle, TTRConfig
from rlrrt.maps import load_builtin
from rlrrt.planner import MotionPlan, Node, Tree
from rlrrt.policy import REACHED, DwaPolicy, EpisodeConfig, ZeroPolicy, rollout
from rlrrt.world import GoalSpec, LidarConfig


def rec(planner, seed, t, finish=10.0):
    ok = t is not None
    return TrialRecord(planner, seed, ok, t, finish if ok else None, 5, 3, 0)


# ---------------------------------------------------------------- config and records


def test_config_invariants():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(budgets=(4, 2))
    with pytest.raises(ValueError):
        ExperimentConfig(planners=("astar",))
    with pytest.raises(ValueError):
        ExperimentConfig(start=(1, 1))


def test_config_text():
    cfg = parse_config_text("""
        map = cluttered   # office floor
        planners = rl_rrt, sst
        budgets = 1, 2.5
        trials = 7
        start = 2, 6, 0
        goal = 27, 20
    """, trials=3)
    assert cfg.map == "cluttered" and cfg.planners == ("rl_rrt", "sst")
    assert cfg.budgets == (1.0, 2.5) and cfg.trials == 3 and cfg.goal == (27.0, 20.0)
    with pytest.raises(ValueError):
        parse_config_text("colour = red")


def test_success_record_needs_finish_time():
    with pytest.raises(ValueError):
        TrialRecord("sst", 0, True, 1.0, None, 1, 1, 0)


records_st = st.lists(
    st.builds(rec, st.sampled_from(["rl_rrt", "sst"]), st.integers(0, 99),
              st.one_of(st.none(), st.floats(0, 100, allow_nan=False)),
              st.floats(0, 500, allow_nan=False)),
    min_size=1, max_size=20)


@given(records_st)
def test_csv_round_trip(records):
    back = records_from_csv(records_to_csv(records))
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert (a.planner, a.seed, a.success, a.tree_size) == (b.planner, b.seed, b.success, b.tree_size)
        for x, y in ((a.finish_time, b.finish_time), (a.wall_time_to_first_solution, b.wall_time_to_first_solution)):
            assert (x is None and y is None) or y == pytest.approx(x, abs=1e-9)


# ---------------------------------------------------------------- success curves


def test_curve_all_instant():
    assert success_curve([rec("sst", i, 0.0) for i in range(3)], (0.5, 1, 2)) == {"sst": [1.0, 1.0, 1.0]}


def test_curve_no_successes():
    assert success_curve([rec("sst", i, None) for i in range(3)], (0.5, 1)) == {"sst": [0.0, 0.0]}


def test_curve_hand_tally():
    records = [rec("a", 0, 0.5), rec("a", 1, 1.5), rec("a", 2, None), rec("a", 3, 3.0)]
    assert success_curve(records, (1, 2, 3)) == {"a": [0.25, 0.5, 0.75]}


def test_curve_needs_records():
    with pytest.raises(ValueError):
        success_curve([], (1,))


@given(records_st, st.lists(st.floats(0, 120), min_size=1, max_size=6))
def test_curve_monotone_and_bounded(records, budgets):
    for frac in success_curve(records, sorted(budgets)).values():
        assert all(0 <= f <= 1 for f in frac)
        assert all(a <= b for a, b in zip(frac, frac[1:]))


def test_summary_and_figure(tmp_path):
    records = [rec("a", 0, 0.5, 30.0), rec("a", 1, None), rec("b", 0, 1.5, 20.0), rec("b", 1, 1.0, 40.0)]
    s = summarize(records, (1.0, 2.0))
    assert s["a"]["success_rate"] == 0.5 and s["b"]["median_finish_time"] == 30.0
    assert s["b"]["success_curve"] == {1.0: 0.5, 2.0: 1.0}
    plot_benchmark(records, (1.0, 2.0), tmp_path / "b.png")
    assert (tmp_path / "b.png").stat().st_size > 0


# ---------------------------------------------------------------- experiments


def tiny_config(**kw):
    base = dict(map="corridor", planners=("sst", "rl_rrt_e"), trials=2, budgets=(50,), budget_mode="iterations",
                start=(3.0, 1.1, 0.0), goal=(6.0, 1.1))
    base.update(kw)
    return ExperimentConfig(**base)


def test_start_at_goal_single_trial():
    r = run_experiment(tiny_config(planners=("sst",), trials=1, goal=(3.2, 1.1)))
    assert len(r.records) == 1
    assert r.records[0].success and r.records[0].finish_time == 0.0


def test_cardinality_and_bytes_deterministic(tmp_path):
    a = run_experiment(tiny_config(), tmp_path / "a", keep_results=True)
    b = run_experiment(tiny_config(), tmp_path / "b")
    assert len(a.records) == 4
    assert [r.seed for r in a.records] == [0, 1, 0, 1]
    assert (tmp_path / "a/records.csv").read_bytes() == (tmp_path / "b/records.csv").read_bytes()
    assert read_records(tmp_path / "a/records.csv")[0].planner == "sst"
    assert check_plans(a, load_builtin("corridor")) == []
    for res in a.results:
        if res.success:
            assert (tmp_path / f"a/plans/{res.planner}_{res.plan.seed}.json").exists()


def test_seed_base_shifts_trials():
    r = run_experiment(tiny_config(planners=("sst",), seed_base=10))
    assert [x.seed for x in r.records] == [10, 11]


def test_sampled_queries_shared_across_planners():
    r = run_experiment(tiny_config(start=None, goal=None, map="training", goal_sample_radius=4.0))
    assert len(r.queries) == 2 and r.queries[0] != r.queries[1]


def test_missing_artifact_fails_before_trials(tmp_path):
    with pytest.raises(FileNotFoundError, match="estimator"):
        run_experiment(tiny_config(planners=("sst", "rl_rrt"), estimator=str(tmp_path / "nope.bin")), tmp_path)
    assert not (tmp_path / "records.csv").exists()
    with pytest.raises(FileNotFoundError, match="map"):
        run_experiment(tiny_config(map=str(tmp_path / "nope.map")))


# ---------------------------------------------------------------- P2P evaluation


def test_p2p_goal_inside_radius_always_succeeds():
    bins = p2p_success_by_distance(ZeroPolicy("diff_drive"), walled_grid(), [0.0, 0.5], 10,
                                   np.random.default_rng(0))
    assert bins[0].rate == 1.0 and bins[0].trials == 10


def test_p2p_zero_policy_far_bins():
    bins = p2p_success_by_distance(ZeroPolicy("diff_drive"), walled_grid(), [2.5, 5, 10], 10,
                                   np.random.default_rng(0), EpisodeConfig(max_episode_time=5.0))
    assert [b.rate for b in bins] == [0.0, 0.0]


def test_p2p_dwa_empty_map_short_goals():
    bins = p2p_success_by_distance(DwaPolicy(), walled_grid(), [0.5, 2.5, 5.0], 30, np.random.default_rng(1))
    assert all(b.rate >= 0.95 for b in bins)


# ---------------------------------------------------------------- TTR fields


def test_contour_oracle_sealed_room():
    g = sealed_room_grid()
    oracle = RolloutTTROracle(DwaPolicy(LidarConfig(noise_sigma=0.0)), g, TTRConfig())
    f = ttr_contour(oracle, g, (2.5, 2.5), 1.0)
    assert f.value_at(2.5, 2.5) <= 0.1
    assert f.unreachable[f.ys.searchsorted(2.5), f.xs.searchsorted(7.5)]
    assert not f.unreachable[f.ys.searchsorted(2.5), f.xs.searchsorted(1.5)]


def test_contour_goal_in_collision():
    g = sealed_room_grid()
    oracle = RolloutTTROracle(DwaPolicy(), g, TTRConfig())
    with pytest.raises(ValueError):
        ttr_contour(oracle, g, (5.0, 3.0), 1.0)


def test_contour_csv(tmp_path, trained_estimator):
    est = trained_estimator[0]
    g = load_builtin("training")
    f = ttr_contour(est, g, (5.0, 1.5), 2.0)
    f.write_csv(tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,ttr,unreachable" and len(lines) - 1 == int(f.free.sum())


# ---------------------------------------------------------------- critic diagnostics


class ConstantCritic:
    robot_kind = "diff_drive"

    def value(self, obs):
        return np.full(len(obs), 2.5)


def dwa_trajectories(n, seed=0, grid=None):
    g = grid or load_builtin("training")
    rng = np.random.default_rng(seed)
    from rlrrt.policy.actor_critic import sample_start_goal

    out = []
    while len(out) < n:
        start, goal = sample_start_goal(g, "diff_drive", 8.0, rng, 0.5)
        out.append(rollout(DwaPolicy(), g, start, goal, EpisodeConfig(max_episode_time=40.0), rng))
    return out


def test_critic_report_shapes(trained_estimator):
    est = trained_estimator[0]
    trajs = dwa_trajectories(3)
    report = critic_vs_ttr_report(ConstantCritic(), est, trajs)
    for series, traj in zip(report, trajs):
        assert len(series.ttr) == len(series.neg_value) == len(traj.observations)
        assert np.all(series.neg_value == -2.5)


def test_critic_report_needs_a_critic(trained_estimator):
    with pytest.raises(TypeError):
        critic_vs_ttr_report(DwaPolicy(), trained_estimator[0], [])


def test_decreasing_fraction():
    assert decreasing_fraction([5, 4, 3, 3, 1]) == 0.75
    assert math.isnan(decreasing_fraction([1.0]))


@pytest.mark.slow
def test_estimator_falls_along_successful_runs(trained_estimator):
    est = trained_estimator[0]
    trajs = [t for t in dwa_trajectories(20, seed=3) if t.outcome == REACHED]
    report = critic_vs_ttr_report(ConstantCritic(), est, trajs)
    fractions = [decreasing_fraction(s.ttr) for s in report if len(s.ttr) > 1]
    assert np.median(fractions) >= 0.8


# ---------------------------------------------------------------- SVG


def chain_tree(n):
    tree = Tree(Node(DiffDriveState(1, 1, 0)), 0.1)
    for i in range(1, n):
        tree.add(Node(DiffDriveState(1 + i, 1, 0)), i - 1)
    return tree


def test_svg_map_only_is_valid_xml():
    root = ET.fromstring(render_svg(walled_grid(5, 4)))
    ns = "{http://www.w3.org/2000/svg}"
    assert root.tag == ns + "svg"
    assert len(root.findall(f"{ns}g/{ns}rect")) > 0
    assert root.findall(f"{ns}line") == []


def test_svg_chain_edges():
    text = render_svg(walled_grid(5, 4), {"rl_rrt": chain_tree(3)})
    assert text.count("<line ") == 2


def test_svg_styles_and_markers(tmp_path):
    plan = MotionPlan([DiffDriveState(1, 1, 0), DiffDriveState(1, 1, 0)], [[(0.0, 0.0)] * 3], 0.1)
    path = tmp_path / "out.svg"
    text = render_svg(walled_grid(5, 4), {"a": chain_tree(2), "b": chain_tree(3)}, {"a": plan}, path,
                      start=(1, 1), goal=GoalSpec((4, 3)))
    assert path.read_text() == text
    assert 'id="tree-a"' in text and 'id="tree-b"' in text and 'id="plan-a"' in text
    assert 'id="start"' in text and 'id="goal"' in text
    assert text == render_svg(walled_grid(5, 4), {"a": chain_tree(2), "b": chain_tree(3)}, {"a": plan},
                              start=(1, 1), goal=GoalSpec((4, 3)))


def test_svg_unwritable(tmp_path):
    with pytest.raises(OSError):
        render_svg(walled_grid(5, 4), out_path=tmp_path / "missing" / "x.svg")


@pytest.mark.parametrize("name", ["corridor", "cluttered", "ci"])
def test_shipped_configs_parse(name):
    from pathlib import Path

    from rlrrt.bench import load_config

    cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / f"{name}.cfg")
    assert cfg.trials >= 1 and cfg.start is not None
