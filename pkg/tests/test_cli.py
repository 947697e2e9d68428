"""CLI subcommands, exit codes, and file outputs."""

import json

import numpy as np
import pytest

from teledrive.cli import main
from teledrive.scoring import EvaluatorSheet, InfractionCounts, save_sheet
from teledrive.session import RunRecord


@pytest.fixture(autouse=True)
def _data_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("TELEDRIVE_DATA_DIR", str(tmp_path / "runs"))
    return tmp_path


def test_simulate_writes_record_and_exits_zero(tmp_path, capsys):
    out = tmp_path / "run.jsonl"
    code = main(["simulate", "--task", "mcity_teledrive", "--world",
                 "mcity_route3", "--seed", "2", "--out", str(out)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["outcome"] == "completed"
    assert out.exists()
    record = RunRecord.load(out)
    assert record.report == report


def test_simulate_config_file(tmp_path, capsys):
    cfg_path = tmp_path / "session.json"
    cfg_path.write_text(json.dumps({
        "task": "obstacle_teledrive", "world": "obstacle_cw_nols", "seed": 4}))
    out = tmp_path / "r.jsonl"
    code = main(["simulate", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["score"] == 1.0


def test_simulate_bad_config_exit_1(tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"task": "warp_drive"}))
    assert main(["simulate", "--config", str(cfg_path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_rt_task_and_score_record(tmp_path, capsys):
    out = tmp_path / "rt.jsonl"
    code = main(["rt-task", "--task", "simple_rt", "--seed", "5",
                 "--latency-mean", "250", "--out", str(out)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["accuracy"] == 1.0

    code = main(["score", "--record", str(out)])
    assert code == 0
    assert json.loads(capsys.readouterr().out) == report


def test_score_sheets(tmp_path, capsys):
    paths = []
    for i, c in enumerate((1.0, 0.9, 0.8)):
        sheet = EvaluatorSheet(f"e{i}", {"run1": InfractionCounts(completion=c)})
        p = tmp_path / f"sheet{i}.json"
        save_sheet(sheet, p)
        paths.append(str(p))
    code = main(["score", "--sheets", *paths, "--mode", "obstacle"])
    assert code == 0
    out = capsys.readouterr().out
    assert "0.9000" in out  # mean across evaluators


def test_stats_two_groups(tmp_path, capsys):
    groups = {"bci": [0.9, 0.95, 1.0, 0.92], "control": [0.8, 0.85, 0.78, 0.9]}
    p = tmp_path / "groups.json"
    p.write_text(json.dumps(groups))
    assert main(["stats", "--groups", str(p), "--tail", "right"]) == 0
    out = capsys.readouterr().out
    assert "Welch t" in out
    assert "mean (SD)" in out


def test_stats_multi_group_grid(tmp_path, capsys):
    rng = np.random.default_rng(0)
    groups = {f"g{i}": rng.normal(i, 1, 6).tolist() for i in range(3)}
    p = tmp_path / "groups.json"
    p.write_text(json.dumps(groups))
    assert main(["stats", "--groups", str(p)]) == 0
    out = capsys.readouterr().out
    assert "ANOVA F" in out
    assert "p(adj)" in out


def test_replay_ok_and_tampered(tmp_path, capsys):
    out = tmp_path / "run.jsonl"
    assert main(["simulate", "--task", "mcity_teledrive", "--world",
                 "mcity_route1", "--seed", "1", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["replay", "--record", str(out)]) == 0
    assert "replay ok" in capsys.readouterr().err

    record = RunRecord.load(out)
    for ev in record.events:
        if ev["type"] == "cursor" and ev["t"] > 10_000 and ev["x"] != 0.5:
            ev["x"] = 1.0 - ev["x"]
            break
    record.save(out)
    assert main(["replay", "--record", str(out)]) == 2
    assert "FAILED" in capsys.readouterr().err


def test_default_record_location_uses_env(tmp_path, capsys):
    code = main(["rt-task", "--task", "simple_rt", "--seed", "1"])
    assert code == 0
    expected = tmp_path / "runs" / "simple_rt_seed1.jsonl"
    assert expected.exists()
