import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from h2df_rlmpc import harness
from h2df_rlmpc.core_types import CombustionOutput, ConfigError, ControlInput, CycleRecord, DivergenceError
from h2df_rlmpc.harness import (
    CYCLE_COLUMNS,
    EVAL_SEGMENTS,
    compute_kpi,
    episode_kinds,
    export_log,
    generate_reference,
    import_log,
    load_config,
    run_closed_loop,
    safety_violations,
)
from h2df_rlmpc.mpc_solver import OcpConfig
from h2df_rlmpc.rl_td3 import Td3Agent

MINI = {
    "dataset": {"n_cycles": 1500},
    "plant_training": {"epochs": 15, "learning_rate": 3e-3},
    "schedule": {"episodes_total": 5, "cycles_per_episode": 40},
    "td3": {"warmup": 20, "batch_size": 16},
}


def mini_config(tmp_path, **extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**MINI, **extra}))
    return load_config(path, output_dir=str(tmp_path / "run"))


@pytest.fixture(scope="module")
def mini_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("mini")
    cfg = mini_config(tmp)
    harness.gen_data(cfg)
    model = harness.train_plant(cfg)
    return cfg, model


def rec(i, ref, imep, delta=0.0, u=(10.0, 0.7, 3.0), mprr=5.0):
    return CycleRecord(i, ref, delta, ControlInput(*u), CombustionOutput(imep, mprr, 500.0), 0.0, 800.0)


# ----------------------------------------------------------- references
def test_training_reference_levels_and_holds():
    ref = generate_reference("training", 5000, seed=3)
    assert np.all((ref >= 4.5) & (ref <= 9.0))
    np.testing.assert_array_equal(ref, generate_reference("training", 5000, seed=3))
    change = np.flatnonzero(np.diff(ref)) + 1
    holds = np.diff(change)
    assert np.all((holds >= 100) & (holds <= 300))


def test_evaluation_reference_structure():
    ref = generate_reference("evaluation", 2000)
    np.testing.assert_array_equal(ref, generate_reference("evaluation", 2000, seed=99))
    assert ref.min() == 4.5 and ref.max() == 9.0
    steps = [s for s, e, v0, v1 in EVAL_SEGMENTS if s > 0 and abs(ref[s] - ref[s - 1]) > 0.1]
    ramps = [(s, e, v0, v1) for s, e, v0, v1 in EVAL_SEGMENTS if v0 != v1]
    assert len(steps) >= 4 and len(ramps) >= 2
    # slope measured on the generated profile, not the segment table
    slopes = [abs(ref[e - 1] - ref[s]) / (e - 1 - s) for s, e, v0, v1 in ramps]
    assert any(0 < m <= 0.01 for m in slopes)


def test_unknown_reference_kind():
    with pytest.raises(ConfigError):
        generate_reference("random", 10)


# ----------------------------------------------------------------- KPIs
def test_kpi_hand_values():
    log = [rec(0, 6.0, 5.7), rec(1, 6.0, 6.4), rec(2, 6.0, 6.0)]
    assert compute_kpi(log)["rmse_imep"] == pytest.approx(0.28867513459481287, abs=1e-15)
    assert compute_kpi([rec(i, 6.0, 6.0) for i in range(5)])["rmse_imep"] == 0.0
    assert compute_kpi([rec(i, 7.0, 6.5) for i in range(7)])["rmse_imep"] == pytest.approx(0.5, abs=1e-15)


def test_kpi_ignores_reference_offset():
    a = [rec(0, 6.0, 5.7, delta=0.0), rec(1, 6.0, 6.4, delta=0.0)]
    b = [rec(0, 6.0, 5.7, delta=1.5), rec(1, 6.0, 6.4, delta=-2.0)]
    assert compute_kpi(a)["rmse_imep"] == compute_kpi(b)["rmse_imep"]


def test_kpi_violation_rate():
    log = [rec(0, 6.0, 6.0, mprr=10.5), rec(1, 6.0, 6.0, mprr=9.9), rec(2, 6.0, 6.0), rec(3, 6.0, 6.0)]
    assert compute_kpi(log)["mprr_violation_rate"] == 0.25


def test_safety_violation_counter():
    ocp = OcpConfig()
    start = ControlInput(10.0, 0.7, 3.0)
    ok = [rec(0, 6, 6, u=(11.0, 0.75, 3.25)), rec(1, 6, 6, u=(11.0, 0.75, 3.0))]
    assert safety_violations(ok, ocp, start) == 0
    bad = [rec(0, 6, 6, u=(11.5, 0.7, 3.0)), rec(1, 6, 6, u=(11.5, 0.7, 8.25))]
    assert safety_violations(bad, ocp, start) == 2


# --------------------------------------------------------------- export
def test_export_round_trip_and_schema(tmp_path):
    rng = np.random.default_rng(0)
    records = [
        CycleRecord(i, rng.uniform(4.5, 9), rng.normal(), ControlInput(*rng.uniform([2, 0.2, 0], [20, 1.2, 8])),
                    CombustionOutput(rng.uniform(4, 9), rng.uniform(0, 10), rng.uniform(0, 1800)),
                    rng.normal(), 800.0)
        for i in range(200)
    ]
    paths = export_log(records, tmp_path / "log.csv")
    assert import_log(paths[0]) == records
    with paths[0].open() as f:
        rows = list(csv.reader(f))
    assert ",".join(rows[0]) == (
        "cycle,ref_imep_bar,delta_ref_bar,imep_bar,mprr_bar_per_deg,nox_ppm,"
        "soi_diesel_deg,doi_diesel_s,doi_hydrogen_s,reward,rail_pressure_bar"
    )
    assert rows[0] == CYCLE_COLUMNS
    for row, r in zip(rows[1:], records):
        assert float(row[7]) == pytest.approx(r.control.doi_diesel / 1000.0, rel=1e-15)
        assert float(row[8]) == pytest.approx(r.control.doi_hydrogen / 1000.0, rel=1e-15)
    assert paths[1].read_text() == paths[0].read_text()
    export_log(records, tmp_path / "log.csv")
    assert import_log(paths[0]) == records


def test_import_rejects_wrong_header(tmp_path):
    (tmp_path / "x.csv").write_text("cycle,imep\n0,6.0\n")
    with pytest.raises(ConfigError):
        import_log(tmp_path / "x.csv")


# --------------------------------------------------------------- config
def test_config_overrides_and_errors(tmp_path):
    cfg = mini_config(tmp_path, seed=5)
    assert cfg.seed == 5 and cfg.schedule.cycles_per_episode == 40
    assert cfg.ocp == OcpConfig()
    (tmp_path / "bad.json").write_text(json.dumps({"no_such_key": 1}))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    (tmp_path / "bad2.json").write_text(json.dumps({"mismatch": {"eval_rail_bar": -1}}))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad2.json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_schedule_arithmetic(tmp_path):
    cfg = mini_config(tmp_path)
    kinds = episode_kinds(cfg)
    assert kinds == ["train"] * 4 + ["validation"]
    full = load_config(None)
    kinds = episode_kinds(full)
    assert len(kinds) == 56 and kinds.count("validation") == 11


# ---------------------------------------------------------- closed loop
def test_zero_agent_reproduces_baseline(mini_run):
    cfg, model = mini_run
    ref = generate_reference("evaluation", 60)
    base = run_closed_loop(model, cfg, ref, 800.0, plant_seed=3)
    hyb = run_closed_loop(model, cfg, ref, 800.0, Td3Agent(cfg.td3), 0.0, plant_seed=3)
    assert hyb.records == base.records


def test_mismatch_changes_trajectory(mini_run):
    cfg, model = mini_run
    ref = generate_reference("evaluation", 60)
    a = run_closed_loop(model, cfg, ref, 1000.0, plant_seed=3)
    b = run_closed_loop(model, cfg, ref, 800.0, plant_seed=3)
    assert len(a.records) == 60
    assert [r.cycle_index for r in a.records] == list(range(60))
    assert np.mean([r.output.imep for r in b.records]) < np.mean([r.output.imep for r in a.records])


def test_train_agent_schedule_and_artifacts(mini_run):
    cfg, _ = mini_run
    harness.run_baseline(cfg)
    result = harness.train_agent(cfg)
    assert result["episodes"] == 5 and result["best_episode"] == 4
    assert result["safety_violations"] == 0
    out = harness._out(cfg)
    with (out / "reward_curve.csv").open() as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["episode", "kind", "mean_reward", "rmse_imep_bar"]
    assert [r[1] for r in rows[1:]] == ["train"] * 4 + ["validation"]
    assert (out / "td3_telemetry.csv").read_text().startswith("update_step,critic1_loss,critic2_loss,actor_loss")
    kpi = harness.evaluate(cfg)
    summary = harness.report(cfg)
    assert summary["hybrid_mismatch_rmse_bar"] == kpi["rmse_imep"]
    assert (out / "hybrid_mismatch_plot.csv").exists()


def test_divergence_abort(mini_run):
    cfg, _ = mini_run
    harness.run_baseline(cfg)
    cfg = replace(cfg, divergence_factor=1e-9, divergence_patience=1)
    with pytest.raises(DivergenceError):
        harness.train_agent(cfg)


def test_stage_without_artifacts_is_config_error(tmp_path):
    cfg = mini_config(tmp_path)
    with pytest.raises(ConfigError):
        harness.run_baseline(cfg)
