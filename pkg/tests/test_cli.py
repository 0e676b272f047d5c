import json
import xml.etree.ElementTree as ET

import pytest

from rlrrt.bench import read_records
from rlrrt.cli import build_parser, main
from rlrrt.estimator import TTRDataset


def test_every_subcommand_registered():
    names = build_parser()._subparsers._group_actions[0].choices
    assert set(names) == {"train-policy", "collect-ttr", "train-estimator", "plan", "bench", "contour", "render",
                          "p2p-eval"}


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["fly"])


def test_plan_writes_report_and_svg(tmp_path, capsys):
    code = main(["plan", "--planner", "sst", "--map", "corridor", "--start", "3,1.1,0", "--goal", "6,1.1",
                 "--iterations", "2000", "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["success"] and report["planner"] == "sst"
    assert (tmp_path / "plan.json").exists()
    ET.parse(tmp_path / "plan.svg")
    assert json.loads(capsys.readouterr().out)["tree_size"] == report["tree_size"]


def test_plan_rl_rrt_needs_estimator(tmp_path):
    with pytest.raises(SystemExit):
        main(["plan", "--planner", "rl_rrt", "--start", "3,1.1", "--goal", "6,1.1", "--out", str(tmp_path)])


def test_bench_writes_csv_json_and_figure(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("map = corridor\nplanners = sst, rrt_dw\nbudgets = 10, 40\nbudget_mode = iterations\n"
                   "start = 3, 1.1, 0\ngoal = 6, 1.1\n")
    main(["bench", "--config", str(cfg), "--trials", "2", "--out", str(tmp_path / "out")])
    records = read_records(tmp_path / "out/records.csv")
    assert len(records) == 4
    summary = json.loads((tmp_path / "out/summary.json").read_text())
    assert set(summary) == {"sst", "rrt_dw"}
    assert (tmp_path / "out/benchmark.png").stat().st_size > 0
    assert json.loads((tmp_path / "out/config.json").read_text())["trials"] == 2


def test_collect_then_train_then_contour(tmp_path):
    data = tmp_path / "ttr.npz"
    main(["collect-ttr", "--episodes", "20", "--goal-radius", "5", "--out", str(data)])
    assert TTRDataset.load(data).header["seed"] == 0
    est = tmp_path / "est.bin"
    main(["train-estimator", "--data", str(data), "--epochs", "2", "--out", str(est)])
    assert json.loads((tmp_path / "est.bin.report.json").read_text())
    assert (tmp_path / "est.bin.losses.png").exists()
    main(["contour", "--goal", "5,1.5", "--step", "4", "--estimator", str(est), "--out", str(tmp_path / "c")])
    assert (tmp_path / "c/predicted.csv").exists() and (tmp_path / "c/predicted.png").exists()


def test_render_from_plan_files(tmp_path):
    main(["plan", "--planner", "sst", "--start", "3,1.1,0", "--goal", "6,1.1", "--iterations", "2000",
          "--out", str(tmp_path)])
    out = tmp_path / "both.svg"
    main(["render", "--plan", str(tmp_path / "plan.json"), "--tree", str(tmp_path / "tree.json"),
          "--start", "3,1.1", "--goal", "6,1.1", "--out", str(out)])
    text = out.read_text()
    assert 'id="plan-plan"' in text and 'id="tree-tree"' in text


def test_p2p_eval(tmp_path, capsys):
    main(["p2p-eval", "--map", "training", "--bins", "0,0.5", "--trials", "3", "--out", str(tmp_path)])
    assert (tmp_path / "p2p.csv").read_text().splitlines()[1].startswith("0.0,0.5,3,3")
    assert (tmp_path / "p2p.png").exists()
