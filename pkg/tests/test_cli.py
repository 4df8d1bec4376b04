import json

import numpy as np
import pytest

from borearm.cli import main
from borearm.kinematics import forward_kinematics

from oracles import oracle_fk


def test_fk_zero_matches_oracle(model, capsys):
    assert main(["fk", "--q", "0,0,0,0,0,0,0", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    T = oracle_fk(model.dh, np.zeros(7), frame=8)
    np.testing.assert_allclose(doc["position"], T[:3, 3], atol=1e-9)
    np.testing.assert_allclose(doc["rotation"], T[:3, :3], atol=1e-9)


def test_fk_frame_flag(model, capsys):
    assert main(["fk", "--q", "0,0,0,0,0,0,0", "--frame", "3", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    pose = forward_kinematics(model.dh, np.zeros(7), frame=3)
    np.testing.assert_allclose(doc["position"], pose.position, atol=1e-12)


def test_fk_out_of_limit_exits_2(capsys):
    assert main(["fk", "--q", "9,0,0,0,0,0,0"]) == 2
    assert "joint 1" in capsys.readouterr().err


def test_fk_garbage_exits_2(capsys):
    assert main(["fk", "--q", "1,2,banana,4,5,6,7"]) == 2


def test_ik_round_trip_from_fk_output(model, capsys):
    q = [0.12, 0.2, 0.3, -0.2, 0.5, 0.4, 0.05]
    assert main(["fk", "--q", ",".join(str(v) for v in q), "--json"]) == 0
    fk_doc = json.loads(capsys.readouterr().out)
    pos = ",".join(str(v) for v in fk_doc["position"])
    rot = ",".join(str(v) for row in fk_doc["rotation"] for v in row)
    q0 = ",".join(str(v) for v in
                  (np.array(q) + np.array([0.02, -0.02, 0.04, 0.03, -0.05, 0.02, 0.0])))
    assert main(["ik", "--pos", pos, "--rot", rot, "--q0", q0, "--json"]) == 0
    ik_doc = json.loads(capsys.readouterr().out)
    assert ik_doc["converged"]
    assert ik_doc["position_residual_m"] < 1e-4
    assert ik_doc["orientation_residual_rad"] < 1e-3


def test_ik_unreachable_exits_1(capsys):
    assert main(["ik", "--pos", "10,0,0"]) == 1
    out = capsys.readouterr().out
    assert "NOT converged" in out


def test_ik_garbage_pose_exits_2():
    assert main(["ik", "--pos", "1,2"]) == 2
    assert main(["ik", "--pos", "0.1,0.2,0.3", "--rot", "1,0,0"]) == 2


def test_statics_output_contains_bounds(capsys):
    assert main(["statics"]) == 0
    out = capsys.readouterr().out
    assert "1.28" in out and "0.64" in out
    assert "PASS" in out


def test_statics_json(capsys):
    assert main(["statics", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["torque_bounds_nm"] == [1.28, 0.64, 0.0]
    assert doc["all_pass"] is True
    assert doc["stiffness_n_per_mm"] >= 1.55


def test_workspace_deterministic_csv(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["workspace", "--samples", "1000", "--seed", "7",
            "--target-spacing", "0.06"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text().splitlines()[0]
    assert header == "x,y,z,count,percentage"


def test_workspace_figure(tmp_path, capsys):
    out = tmp_path / "map.csv"
    fig = tmp_path / "map.png"
    assert main(["workspace", "--samples", "500", "--seed", "1",
                 "--target-spacing", "0.08", "--out", str(out),
                 "--fig", str(fig)]) == 0
    assert fig.exists() and fig.stat().st_size > 1000


def test_statics_figure(tmp_path, capsys):
    fig = tmp_path / "statics.png"
    assert main(["statics", "--fig", str(fig)]) == 0
    assert fig.exists() and fig.stat().st_size > 1000


def test_model_print(capsys):
    assert main(["model"]) == 0
    out = capsys.readouterr().out
    assert "prismatic" in out and "revolute" in out and "fixed" in out
    assert "0.00573" in out or "5.73" in out


def test_replay_command(tmp_path, capsys, model, rng):
    from borearm.teleop import InputSample, save_trace
    trace_path = tmp_path / "trace.jsonl"
    save_trace(trace_path, [(t, InputSample(v=[0.5, 0, 0])) for t in range(20)])
    assert main(["replay", "--trace", str(trace_path), "--no-scene"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["tick"] == 20
    assert len(doc["q"]) == 7


def test_harness_repeat_command(capsys):
    assert main(["harness", "repeat", "--repeats", "3"]) == 0
    out = capsys.readouterr().out
    assert "worst position std" in out
    assert " 0 m" in out


def test_harness_score_command(tmp_path, capsys, model, rng):
    from borearm.harness import save_pose_log
    poses = [forward_kinematics(model.dh, q)
             for q in rng.uniform(model.limits.lower, model.limits.upper, size=(3, 7))]
    log = save_pose_log(tmp_path / "log.jsonl", poses)
    targets = tmp_path / "targets.txt"
    targets.write_text("\n".join(" ".join(str(v) for v in p.position) for p in poses))
    assert main(["harness", "score", "--log", str(log), "--targets", str(targets)]) == 0
    out = capsys.readouterr().out
    assert "mean error: 0.000 mm" in out


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["fk", "--bogus"])
    assert exc.value.code == 2
