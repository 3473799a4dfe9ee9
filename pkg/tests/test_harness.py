import json
import subprocess
import sys

import numpy as np
import pytest

from acclab import harness
from acclab.env import EnvConfig
from acclab.trajectory import CsvFormatError, Trajectory


def make_traj(n=60, dt=0.1, e=None, seed=0):
    rng = np.random.default_rng(seed)
    e = np.linspace(2.5, 0.0, n) if e is None else np.asarray(e, dtype=float)
    e_dot = rng.normal(scale=0.3, size=n)
    u = rng.uniform(-2.6, 2.6, size=n)
    return Trajectory(
        t=np.arange(n) * dt,
        e=e,
        e_dot=e_dot,
        v=30.0 - e_dot,
        u=u,
        a=u.copy(),
        reward=-np.abs(e) / 10.0,
    )


def test_csv_round_trip_lossless(tmp_path):
    traj = make_traj()
    path = str(tmp_path / "t.csv")
    harness.export_csv(traj, path)
    back = harness.load_csv(path)
    for col in ("t", "e", "e_dot", "v", "u", "a", "reward"):
        assert np.array_equal(getattr(back, col), getattr(traj, col)), col


def test_csv_header_mismatch_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,e,e_dot,v_i,u,a,reward\n0,1,2,3,4,5,6\n")
    with pytest.raises(CsvFormatError) as err:
        harness.load_csv(str(path))
    assert err.value.line == 1


def test_csv_bad_row_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,e,e_dot,v_i,u,a,reward\n0,1,2,3,4,5,6\n0.1,oops,2,3,4,5,6\n")
    with pytest.raises(CsvFormatError) as err:
        harness.load_csv(str(path))
    assert err.value.line == 3
    path.write_text("t,e,e_dot,v_i,u,a,reward\n0,1,2\n")
    with pytest.raises(CsvFormatError):
        harness.load_csv(str(path))


def test_compare_identical_trajectories():
    cfg = EnvConfig.for_case(1)
    traj = make_traj()
    m = harness.compare(traj, traj, cfg)
    assert m.relative_cost_gap == 0.0
    assert not m.oscillation
    assert m.cost_drl == m.cost_dp > 0


def test_compare_flags_oscillation():
    cfg = EnvConfig.for_case(1)
    n = 60
    # oscillating tail: +-0.3 swings crossing zero repeatedly in the last 5 s
    e = np.concatenate([np.linspace(2.5, 0.3, n - 50), 0.3 * np.cos(np.arange(50) * 0.5)])
    drl = make_traj(n=n, e=e)
    dp_traj = make_traj(n=n, seed=1)
    m = harness.compare(drl, dp_traj, cfg)
    assert m.oscillation and m.zero_crossings >= 2 and m.peak_to_peak > 0.2


def test_compare_requires_equal_lengths_and_positive_benchmark():
    cfg = EnvConfig.for_case(1)
    with pytest.raises(ValueError):
        harness.compare(make_traj(50), make_traj(60), cfg)
    zero = make_traj(e=np.zeros(60))
    zero.u[...] = 0.0
    zero.e_dot[...] = 0.0
    with pytest.raises(ValueError):
        harness.compare(zero, zero, cfg)


def test_zero_error_trajectory_stats_are_zero():
    cfg = EnvConfig.for_case(1)
    quiet = make_traj(e=np.zeros(60))
    quiet.e_dot[...] = 0.0
    bench = make_traj(seed=2)
    m = harness.compare(quiet, bench, cfg)
    assert m.last5s_mean_abs_e == 0.0
    assert m.last5s_max_e == 0.0 and m.last5s_min_e == 0.0
    assert not m.oscillation


def test_merge_and_spec_layering():
    merged = harness.merge_config({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"b": 9}})
    assert merged == {"a": {"b": 9, "c": 2}, "d": 3}
    spec = harness.build_spec(
        [
            {"kind": "dp-solve"},
            {"case": 2, "dp": {"grid_scale": 0.5}},
            {"case": 3},
        ]
    )
    assert spec.case == 3  # later layer wins
    assert spec.dp["grid_scale"] == 0.5
    assert spec.seed == 1  # default


def test_spec_validation():
    with pytest.raises(harness.ExperimentError):
        harness.build_spec([{"kind": "fly-to-moon"}])
    with pytest.raises(harness.ExperimentError):
        harness.build_spec([{"kind": "train", "case": 1}])  # no explicit seed
    with pytest.raises(harness.ExperimentError):
        harness.build_spec([{"kind": "train", "seed": 1, "case": 9}])


def test_build_env_config_rejects_bad_leaf():
    with pytest.raises(harness.ExperimentError):
        harness.build_env_config(1, {"alpha": 0.9})  # alpha+beta != 1
    cfg = harness.build_env_config(2, {"plant": {"phi": 0.3}})
    assert cfg.plant.k == 3
    assert cfg.plant.delay_enabled and not cfg.plant.lag_enabled


def run_spec(layers):
    return harness.run_experiment(harness.build_spec(layers))


@pytest.fixture(scope="module")
def tiny_train_dir(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("train1"))
    manifest = run_spec(
        [
            {
                "kind": "train",
                "case": 1,
                "seed": 5,
                "out": out,
                "env": {"scenario": {"episode_len": 40}},
                "agent": {
                    "total_steps": 400,
                    "warmup_steps": 80,
                    "replay_capacity": 1000,
                },
            }
        ]
    )
    return out, manifest


def test_train_experiment_artifacts(tiny_train_dir):
    out, manifest = tiny_train_dir
    names = {o["path"] for o in manifest["outputs"]}
    assert names == {"actor.npz", "learning_curve.csv", "trajectory.csv", "metrics.json"}
    for entry in manifest["outputs"]:
        assert len(entry["sha256"]) == 64 and entry["bytes"] > 0
    metrics = json.load(open(f"{out}/metrics.json"))
    assert metrics["kind"] == "train" and "episode_cost" in metrics
    traj = harness.load_csv(f"{out}/trajectory.csv")
    assert len(traj) == 40


def test_rerun_reproduces_identical_hashes(tmp_path, tiny_train_dir):
    out1, manifest1 = tiny_train_dir
    out2 = str(tmp_path / "rerun")
    spec_layers = dict(manifest1["spec"])
    spec_layers["out"] = out2
    manifest2 = run_spec([spec_layers])
    h1 = {o["path"]: o["sha256"] for o in manifest1["outputs"]}
    h2 = {o["path"]: o["sha256"] for o in manifest2["outputs"]}
    assert h1 == h2
    assert manifest1["config_hash"] != manifest2["config_hash"]  # out dir differs


def test_dp_solve_and_compare_flow(tmp_path, tiny_train_dir):
    train_out, _ = tiny_train_dir
    dp_out = str(tmp_path / "dp")
    manifest = run_spec(
        [
            {
                "kind": "dp-solve",
                "case": 1,
                "out": dp_out,
                "env": {"scenario": {"episode_len": 40}},
                "dp": {"grid_scale": 0.2},
            }
        ]
    )
    names = {o["path"] for o in manifest["outputs"]}
    assert "dp_trajectory.csv" in names and "dp_tables.npz" in names
    traj = harness.load_csv(f"{dp_out}/dp_trajectory.csv")
    assert len(traj) == 40
    assert traj.t[0] == 0.0 and traj.t[-1] == pytest.approx(3.9)

    cmp_out = str(tmp_path / "cmp")
    run_spec(
        [
            {
                "kind": "compare",
                "case": 1,
                "out": cmp_out,
                "env": {"scenario": {"episode_len": 40}},
                "inputs": {
                    "drl_trajectory": f"{train_out}/trajectory.csv",
                    "dp_trajectory": f"{dp_out}/dp_trajectory.csv",
                },
            }
        ]
    )
    metrics = json.load(open(f"{cmp_out}/metrics.json"))
    assert metrics["cost_dp"] > 0
    assert "relative_cost_gap" in metrics and "oscillation" in metrics


def test_evaluate_transfer_and_report_flow(tmp_path, tiny_train_dir):
    train_out, _ = tiny_train_dir
    ev_out = str(tmp_path / "ev")
    run_spec(
        [
            {
                "kind": "evaluate",
                "case": 1,
                "out": ev_out,
                "env": {"scenario": {"episode_len": 40}},
                "inputs": {"actor": f"{train_out}/actor.npz"},
            }
        ]
    )
    ev_metrics = json.load(open(f"{ev_out}/metrics.json"))
    assert ev_metrics["checkpoint_case"] == 1

    tr_out = str(tmp_path / "tr")
    run_spec(
        [
            {
                "kind": "transfer",
                "case": 4,
                "out": tr_out,
                "env": {"scenario": {"episode_len": 40}},
                "inputs": {"actor": f"{train_out}/actor.npz"},
            }
        ]
    )
    tr_metrics = json.load(open(f"{tr_out}/metrics.json"))
    assert tr_metrics["source_case"] == 1 and tr_metrics["target_case"] == 4

    rep_out = str(tmp_path / "rep")
    run_spec([{"kind": "report", "out": rep_out, "inputs": {"dir": str(tmp_path)}}])
    report = json.load(open(f"{rep_out}/report.json"))
    assert any("metrics.json" in k for k in report["runs"])


def test_failed_run_cleans_partial_outputs(tmp_path):
    out = str(tmp_path / "bad")
    with pytest.raises(harness.ExperimentError):
        run_spec(
            [
                {
                    "kind": "evaluate",
                    "case": 1,
                    "out": out,
                    "inputs": {"actor": str(tmp_path / "missing.npz")},
                }
            ]
        )
    import os

    assert not os.path.exists(f"{out}/manifest.json")
    assert not os.path.exists(f"{out}/metrics.json")


def cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "acclab.cli", *args], capture_output=True, text=True
    )


def test_cli_success_and_error_paths(tmp_path):
    out = str(tmp_path / "dp")
    res = cli(
        "dp-solve",
        "--case",
        "1",
        "--out",
        out,
        "--grid-scale",
        "0.2",
        "--set",
        "env.scenario.episode_len=30",
    )
    assert res.returncode == 0, res.stderr
    summary = json.loads(res.stdout)
    assert summary["out"] == out
    manifest = json.load(open(f"{out}/manifest.json"))
    assert manifest["spec"]["env"]["scenario"]["episode_len"] == 30

    res = cli("evaluate", "--case", "1", "--out", str(tmp_path / "x"), "--actor", "nope.npz")
    assert res.returncode == 1
    err = json.loads(res.stderr)
    assert err["error"] == "ExperimentError"
    assert "nope.npz" in err["message"]


def test_cli_config_file_layering(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "case": 1,
                "dp": {"grid_scale": 0.2},
                "env": {"scenario": {"episode_len": 25}},
            }
        )
    )
    out = str(tmp_path / "out")
    res = cli("dp-solve", "--config", str(cfg_path), "--out", out, "--set", "dp.save_tables=false")
    assert res.returncode == 0, res.stderr
    manifest = json.load(open(f"{out}/manifest.json"))
    assert manifest["spec"]["dp"]["grid_scale"] == 0.2
    assert manifest["spec"]["dp"]["save_tables"] is False
    names = {o["path"] for o in manifest["outputs"]}
    assert "dp_tables.npz" not in names
