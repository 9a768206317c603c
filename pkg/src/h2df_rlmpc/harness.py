"""Experiment orchestration: data, plant model, closed loop, agent training, KPIs.

Every stage reads and writes files under ``ExperimentConfig.output_dir`` so
the CLI subcommands can run one at a time, and :func:`run_pipeline` chains
them.  All randomness derives from the seeds in the config.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from . import engine_sim
from .core_types import (
    CombustionOutput,
    ConfigError,
    ControlInput,
    CycleRecord,
    DivergenceError,
    ScalingTable,
    build_agent_state,
)
from .engine_sim import PlantConfig
from .mpc_solver import MpcSolver, OcpConfig, apply
from .neural_plant import HIDDEN, NeuralPlant, TrainHyper, dataset_arrays, train, write_telemetry
from .rl_td3 import ReplayBuffer, Td3Agent, Td3Hyperparams, compute_reward

log = logging.getLogger(__name__)

REF_LOW, REF_HIGH = 4.5, 9.0
SAFETY_TOL = 1e-9  # float rounding allowance when re-checking applied inputs

CYCLE_COLUMNS = [
    "cycle", "ref_imep_bar", "delta_ref_bar", "imep_bar", "mprr_bar_per_deg", "nox_ppm",
    "soi_diesel_deg", "doi_diesel_s", "doi_hydrogen_s", "reward", "rail_pressure_bar",
]
DATASET_COLUMNS = [
    "cycle", "soi_diesel_deg", "doi_diesel_ms", "doi_hydrogen_ms", "imep_bar", "mprr_bar_per_deg", "nox_ppm",
]


# ---------------------------------------------------------------- config
@dataclass(frozen=True)
class Schedule:
    episodes_total: int = 56
    cycles_per_episode: int = 2000
    train_per_validation: int = 4

    def __post_init__(self):
        if self.cycles_per_episode < 1 or self.episodes_total < 1 or self.train_per_validation < 1:
            raise ConfigError("schedule counts must be >= 1")


@dataclass(frozen=True)
class Mismatch:
    train_rail_bar: float = 1000.0
    eval_rail_bar: float = 800.0

    def __post_init__(self):
        if self.train_rail_bar <= 0 or self.eval_rail_bar <= 0:
            raise ConfigError("rail pressures must be positive")


@dataclass(frozen=True)
class DatasetConfig:
    n_cycles: int = 20000
    hold: int = 3
    redraw_every: int = 50
    levels: tuple = ((2.0, 20.0), (0.2, 1.2), (0.0, 8.0))


@dataclass(frozen=True)
class ExperimentConfig:
    plant: PlantConfig = field(default_factory=PlantConfig)
    ocp: OcpConfig = field(default_factory=OcpConfig)
    td3: Td3Hyperparams = field(default_factory=Td3Hyperparams)
    schedule: Schedule = field(default_factory=Schedule)
    mismatch: Mismatch = field(default_factory=Mismatch)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    plant_training: TrainHyper = field(default_factory=lambda: TrainHyper(epochs=300, learning_rate=3e-3))
    scaling: dict = field(default_factory=lambda: ScalingTable().to_dict())
    initial_control: tuple[float, float, float] = (10.0, 0.7, 3.0)
    divergence_factor: float = 2.0
    divergence_patience: int = 3
    seed: int = 0
    output_dir: str = "runs/default"

    @property
    def scaling_table(self) -> ScalingTable:
        return ScalingTable.from_dict(self.scaling)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        try:
            if "plant" in data:
                kw["plant"] = PlantConfig.from_dict(data.pop("plant"))
            if "ocp" in data:
                kw["ocp"] = OcpConfig.from_dict(data.pop("ocp"))
            if "td3" in data:
                kw["td3"] = Td3Hyperparams.from_dict(data.pop("td3"))
            if "schedule" in data:
                kw["schedule"] = Schedule(**data.pop("schedule"))
            if "mismatch" in data:
                kw["mismatch"] = Mismatch(**data.pop("mismatch"))
            if "dataset" in data:
                ds = dict(data.pop("dataset"))
                if "levels" in ds:
                    ds["levels"] = tuple(tuple(map(float, pair)) for pair in ds["levels"])
                kw["dataset"] = DatasetConfig(**ds)
            if "plant_training" in data:
                kw["plant_training"] = TrainHyper(**data.pop("plant_training"))
            if "initial_control" in data:
                kw["initial_control"] = tuple(float(v) for v in data.pop("initial_control"))
            kw.update(data)
            cfg = cls(**kw)
            cfg.scaling_table  # validates ranges
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    """Defaults, then the JSON file (partial sections allowed), then overrides."""
    base = ExperimentConfig().to_dict()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for key, val in user.items():
            if isinstance(val, dict) and isinstance(base.get(key), dict) and key != "scaling":
                merged = dict(base[key])
                if key == "plant" and "coefficients" in val:
                    merged["coefficients"] = {**merged["coefficients"], **val["coefficients"]}
                    val = {k: v for k, v in val.items() if k != "coefficients"}
                merged.update(val)
                base[key] = merged
            else:
                base[key] = val
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(base)


# ------------------------------------------------------------- references
EVAL_SEGMENTS = [
    # (start, end, level at start, level at end) on a 2000-cycle grid
    (0, 150, 6.0, 6.0),
    (150, 300, 8.0, 8.0),
    (300, 450, 5.0, 5.0),
    (450, 650, 5.0, 7.0),
    (650, 800, 9.0, 9.0),
    (800, 950, 4.5, 4.5),
    (950, 1190, 4.5, 6.9),
    (1190, 1350, 9.0, 9.0),
    (1350, 1500, 6.5, 6.5),
    (1500, 1650, 6.5, 8.0),
    (1650, 1800, 5.5, 5.5),
    (1800, 2000, 7.5, 7.5),
]


def generate_reference(kind: str, n_cycles: int, seed: int = 0) -> np.ndarray:
    """IMEP reference in bar.

    ``training``: random piecewise-constant levels in [4.5, 9] held 100-300
    cycles.  ``evaluation``: the fixed step/ramp profile above, stretched to
    ``n_cycles``.
    """
    if n_cycles < 1:
        raise ConfigError("n_cycles must be >= 1")
    if kind == "training":
        rng = np.random.default_rng(seed)
        out = np.empty(n_cycles)
        i = 0
        while i < n_cycles:
            hold = int(rng.integers(100, 301))
            out[i : i + hold] = rng.uniform(REF_LOW, REF_HIGH)
            i += hold
        return out
    if kind == "evaluation":
        grid = np.arange(n_cycles) * (2000.0 / n_cycles)
        out = np.empty(n_cycles)
        for start, end, v0, v1 in EVAL_SEGMENTS:
            sel = (grid >= start) & (grid < end)
            out[sel] = v0 + (v1 - v0) * (grid[sel] - start) / (end - start)
        return out
    raise ConfigError(f"unknown reference kind {kind!r}")


# ---------------------------------------------------------------- episodes
@dataclass
class EpisodeLog:
    records: list[CycleRecord]
    kind: str  # train | validation | baseline
    mpc_telemetry: list[tuple] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        return compute_kpi(self)


def compute_kpi(log: EpisodeLog | Sequence[CycleRecord], y_max_mprr: float = 10.0) -> dict:
    """RMSE against the unshifted reference, mean reward, MPRR violation rate."""
    records = log.records if isinstance(log, EpisodeLog) else list(log)
    if not records:
        raise ValueError("empty log")
    err = np.array([r.ref_imep - r.output.imep for r in records])
    return {
        "rmse_imep": float(np.sqrt(np.mean(err**2))),
        "mean_reward": float(np.mean([r.reward for r in records])),
        "mprr_violation_rate": float(np.mean([r.output.mprr > y_max_mprr for r in records])),
    }


def safety_violations(records: Sequence[CycleRecord], ocp: OcpConfig, u_start: ControlInput) -> int:
    """Count cycles whose applied input leaves the box or exceeds the rate limit."""
    lo, hi = np.asarray(ocp.u_min), np.asarray(ocp.u_max)
    du_max = np.asarray(ocp.delta_u_max)
    prev = u_start.as_array()
    bad = 0
    for rec in records:
        u = rec.control.as_array()
        if np.any(u < lo - SAFETY_TOL) or np.any(u > hi + SAFETY_TOL) or np.any(
            np.abs(u - prev) > du_max + SAFETY_TOL
        ):
            bad += 1
        prev = u
    return bad


def _observer_init(model: NeuralPlant, imep: float, u: np.ndarray, n: int = 50) -> np.ndarray:
    h = np.zeros(HIDDEN)
    vec = np.concatenate([[imep], u])
    for _ in range(n):
        h, _ = model.advance(h, vec)
    return h


def run_closed_loop(
    model: NeuralPlant,
    cfg: ExperimentConfig,
    reference: np.ndarray,
    rail_pressure: float,
    agent: Td3Agent | None = None,
    noise_std: float = 0.0,
    plant_seed: int = 0,
    kind: str = "baseline",
    buffer: ReplayBuffer | None = None,
    learn: bool = False,
    on_update: Callable[[dict], None] | None = None,
) -> EpisodeLog:
    """One episode of MPC (optionally with the agent's reference offset) on the simulator."""
    ocp = cfg.ocp
    scaling = cfg.scaling_table
    plant_cfg = replace(cfg.plant, rail_pressure=rail_pressure)
    solver = MpcSolver(model, ocp)
    N = ocp.horizon

    u = ControlInput(*cfg.initial_control)
    plant = engine_sim.initial_state(plant_cfg, u, seed=plant_seed)
    imep_meas = plant.imep_prev
    h = _observer_init(model, imep_meas, u.as_array())

    n = len(reference)
    padded = np.concatenate([reference, np.full(N + 1, reference[-1])])
    records: list[CycleRecord] = []
    telemetry = []
    warm = None
    for i in range(n):
        state = build_agent_state(records[-1:], float(reference[i]))
        s_norm = state.normalized(scaling)
        delta = agent.select_action(s_norm, noise_std) if agent is not None else 0.0

        x0 = np.concatenate([h, [imep_meas], u.as_array()])
        sol = solver.solve(x0, padded[i : i + N + 1], delta, warm)
        warm = sol
        u = apply(sol, u, ocp)
        plant, y = engine_sim.step(plant, u, plant_cfg)
        reward = compute_reward(float(reference[i]), y.imep)
        rec = CycleRecord(i, float(reference[i]), float(delta), u, y, reward, float(rail_pressure))
        records.append(rec)
        telemetry.append((i, sol.sqp_iters_used, sol.cost, sol.kkt_residual, sol.qp_status))

        h, _ = model.advance(h, np.concatenate([[imep_meas], u.as_array()]))
        imep_meas = y.imep

        if buffer is not None:
            ref_next = float(reference[i + 1]) if i + 1 < n else float(reference[i])
            s_next = build_agent_state([rec], ref_next).normalized(scaling)
            buffer.store(s_norm, [delta], reward, s_next, i == n - 1)
            if learn and agent is not None and len(buffer) >= agent.hyper.warmup:
                report = agent.update(buffer)
                if on_update is not None:
                    on_update(report)
    return EpisodeLog(records, kind, telemetry)


# ------------------------------------------------------------------- export
def _seconds(ms: float) -> str:
    """Exact decimal shift of the shortest repr, so re-import is bit-exact."""
    return format(Decimal(repr(float(ms))).scaleb(-3), "f")


def _millis(text: str) -> float:
    return float(Decimal(text).scaleb(3))


def export_log(log: EpisodeLog | Sequence[CycleRecord], path) -> list[Path]:
    """Write the cycle CSV and its plot-data twin (down-sampling factor 1)."""
    records = log.records if isinstance(log, EpisodeLog) else list(log)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        rows = [
            [
                str(r.cycle_index), repr(float(r.ref_imep)), repr(float(r.delta_ref)), repr(float(r.output.imep)),
                repr(float(r.output.mprr)), repr(float(r.output.nox)), repr(float(r.control.soi_diesel)),
                _seconds(r.control.doi_diesel), _seconds(r.control.doi_hydrogen),
                repr(float(r.reward)), repr(float(r.rail_pressure)),
            ]
            for r in records
        ]
        plot_path = path.with_name(path.stem + "_plot" + path.suffix)
        for target in (path, plot_path):
            with target.open("w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(CYCLE_COLUMNS)
                writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return [path, plot_path]


def import_log(path) -> list[CycleRecord]:
    with Path(path).open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != CYCLE_COLUMNS:
            raise ConfigError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            out.append(
                CycleRecord(
                    cycle_index=int(row[0]),
                    ref_imep=float(row[1]),
                    delta_ref=float(row[2]),
                    control=ControlInput(float(row[6]), _millis(row[7]), _millis(row[8])),
                    output=CombustionOutput(imep=float(row[3]), mprr=float(row[4]), nox=float(row[5])),
                    reward=float(row[9]),
                    rail_pressure=float(row[10]),
                )
            )
    return out


def export_dataset(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(DATASET_COLUMNS)
        for i, (u, y) in enumerate(rows):
            writer.writerow([i, *(repr(float(v)) for v in u.as_array()),
                             repr(float(y.imep)), repr(float(y.mprr)), repr(float(y.nox))])


def import_dataset(path):
    rows = []
    with Path(path).open(newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != DATASET_COLUMNS:
            raise ConfigError(f"{path}: unexpected header {header}")
        for row in reader:
            v = [float(x) for x in row[1:]]
            rows.append((ControlInput(v[0], v[1], v[2]), CombustionOutput(imep=v[3], mprr=v[4], nox=v[5])))
    return rows


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------- stages
def _out(cfg: ExperimentConfig) -> Path:
    return Path(cfg.output_dir)


def gen_data(cfg: ExperimentConfig) -> Path:
    ds = cfg.dataset
    rows = engine_sim.generate_prbs_dataset(
        ds.n_cycles, cfg.plant, ds.levels, ds.hold, seed=cfg.seed,
        redraw_every=ds.redraw_every, rail_pressure=cfg.mismatch.train_rail_bar,
    )
    path = _out(cfg) / "dataset.csv"
    export_dataset(rows, path)
    return path


def train_plant(cfg: ExperimentConfig) -> NeuralPlant:
    rows = import_dataset(_out(cfg) / "dataset.csv")
    U, Y = dataset_arrays(rows)
    hyper = replace(cfg.plant_training, seed=cfg.plant_training.seed + cfg.seed)
    res = train(U, Y, hyper, cfg.scaling_table)
    res.model.save(_out(cfg) / "plant_model.json", {"val_rmse": res.val_rmse.tolist()})
    write_telemetry(res.history, _out(cfg) / "plant_training.csv")
    log.info("plant model validation RMSE (imep, nox, mprr): %s", res.val_rmse)
    return res.model


def _load_model(cfg: ExperimentConfig) -> NeuralPlant:
    path = _out(cfg) / "plant_model.json"
    if not path.exists():
        raise ConfigError(f"{path} missing; run train-plant first")
    return NeuralPlant.load(path)


def _eval_reference(cfg: ExperimentConfig) -> np.ndarray:
    return generate_reference("evaluation", cfg.schedule.cycles_per_episode)


def _eval_seed(cfg: ExperimentConfig) -> int:
    return cfg.seed + 7


def _validation_seed(cfg: ExperimentConfig) -> int:
    # distinct noise from the final evaluation so checkpoint selection does not see it
    return cfg.seed + 11


def run_baseline(cfg: ExperimentConfig) -> dict:
    """Baseline MPC on the evaluation profile at both rail pressures."""
    model = _load_model(cfg)
    ref = _eval_reference(cfg)
    out = {}
    for label, rail in (("baseline_nominal", cfg.mismatch.train_rail_bar),
                        ("baseline_mismatch", cfg.mismatch.eval_rail_bar)):
        ep = run_closed_loop(model, cfg, ref, rail, plant_seed=_eval_seed(cfg), kind="baseline")
        export_log(ep, _out(cfg) / f"{label}.csv")
        _write_csv(_out(cfg) / f"{label}_mpc.csv", ["cycle", "sqp_iters_used", "cost", "kkt_residual", "qp_status"],
                   ep.mpc_telemetry)
        kpi = ep.summary
        kpi["safety_violations"] = safety_violations(ep.records, cfg.ocp, ControlInput(*cfg.initial_control))
        out[label] = kpi
    _write_json(_out(cfg) / "baseline_summary.json", out)
    return out


def episode_kinds(cfg: ExperimentConfig) -> list[str]:
    """4 noisy training episodes, then 1 validation episode, repeated."""
    k = cfg.schedule.train_per_validation
    return ["validation" if (i + 1) % (k + 1) == 0 else "train" for i in range(cfg.schedule.episodes_total)]


def train_agent(cfg: ExperimentConfig) -> dict:
    model = _load_model(cfg)
    base_path = _out(cfg) / "baseline_summary.json"
    if not base_path.exists():
        raise ConfigError(f"{base_path} missing; run run-baseline first")
    baseline_rmse = json.loads(base_path.read_text())["baseline_mismatch"]["rmse_imep"]

    torch.set_num_threads(1)
    hyper = replace(cfg.td3, seed=cfg.td3.seed + cfg.seed)
    agent = Td3Agent(hyper)
    buffer = ReplayBuffer(hyper.buffer_capacity, hyper.state_dim, seed=hyper.seed + 3)
    rail = cfg.mismatch.eval_rail_bar
    n = cfg.schedule.cycles_per_episode
    eval_ref = _eval_reference(cfg)
    u_start = ControlInput(*cfg.initial_control)

    curve, telemetry = [], []
    best = (math.inf, -1)
    bad_streak = 0
    violations = 0
    mprr_train = []

    def record_update(report):
        if not report.get("skipped"):
            telemetry.append((len(telemetry), report["critic1"], report["critic2"], report.get("actor", "")))

    t0 = time.time()
    for ep, kind in enumerate(episode_kinds(cfg)):
        if kind == "train":
            ref = generate_reference("training", n, seed=cfg.seed * 1000 + ep)
            log_ep = run_closed_loop(
                model, cfg, ref, rail, agent, hyper.exploration_noise_std,
                plant_seed=cfg.seed * 1000 + 500 + ep, kind="train", buffer=buffer, learn=True,
                on_update=record_update,
            )
        else:
            log_ep = run_closed_loop(model, cfg, eval_ref, rail, agent, 0.0, plant_seed=_validation_seed(cfg),
                                     kind="validation")
        kpi = log_ep.summary
        violations += safety_violations(log_ep.records, cfg.ocp, u_start)
        mprr_train.append(kpi["mprr_violation_rate"])
        curve.append((ep, kind, kpi["mean_reward"], kpi["rmse_imep"]))
        log.info("episode %d %s rmse %.4f reward %.4f (%.0fs)", ep, kind, kpi["rmse_imep"],
                 kpi["mean_reward"], time.time() - t0)
        if kind == "validation":
            if kpi["rmse_imep"] < best[0]:
                best = (kpi["rmse_imep"], ep)
                agent.save(_out(cfg) / "agent.json", {"episode": ep, "validation_rmse": kpi["rmse_imep"]})
            if kpi["rmse_imep"] > cfg.divergence_factor * baseline_rmse:
                bad_streak += 1
                if bad_streak >= cfg.divergence_patience:
                    _write_csv(_out(cfg) / "reward_curve.csv",
                               ["episode", "kind", "mean_reward", "rmse_imep_bar"], curve)
                    raise DivergenceError(
                        f"validation RMSE above {cfg.divergence_factor}x baseline for "
                        f"{bad_streak} consecutive validations (episode {ep})"
                    )
            else:
                bad_streak = 0

    if best[1] < 0:
        # schedule without validation episodes: keep the final agent
        agent.save(_out(cfg) / "agent.json", {"episode": len(curve) - 1, "validation_rmse": None})
    _write_csv(_out(cfg) / "reward_curve.csv", ["episode", "kind", "mean_reward", "rmse_imep_bar"], curve)
    _write_csv(_out(cfg) / "td3_telemetry.csv", ["update_step", "critic1_loss", "critic2_loss", "actor_loss"],
               telemetry)
    result = {
        "best_validation_rmse": best[0] if best[1] >= 0 else None,
        "best_episode": best[1],
        "episodes": len(curve),
        "safety_violations": violations,
        "train_seconds": time.time() - t0,
    }
    _write_json(_out(cfg) / "training_summary.json", {k: v for k, v in result.items() if k != "train_seconds"})
    return result


def evaluate(cfg: ExperimentConfig) -> dict:
    model = _load_model(cfg)
    agent_path = _out(cfg) / "agent.json"
    if not agent_path.exists():
        raise ConfigError(f"{agent_path} missing; run train-agent first")
    agent = Td3Agent.load(agent_path)
    ep = run_closed_loop(model, cfg, _eval_reference(cfg), cfg.mismatch.eval_rail_bar, agent, 0.0,
                         plant_seed=_eval_seed(cfg), kind="validation")
    export_log(ep, _out(cfg) / "hybrid_mismatch.csv")
    kpi = ep.summary
    kpi["safety_violations"] = safety_violations(ep.records, cfg.ocp, ControlInput(*cfg.initial_control))
    _write_json(_out(cfg) / "hybrid_summary.json", kpi)
    return kpi


def report(cfg: ExperimentConfig) -> dict:
    base = json.loads((_out(cfg) / "baseline_summary.json").read_text())
    hybrid = json.loads((_out(cfg) / "hybrid_summary.json").read_text())
    b_nom = base["baseline_nominal"]["rmse_imep"]
    b_mis = base["baseline_mismatch"]["rmse_imep"]
    h_mis = hybrid["rmse_imep"]
    summary = {
        "baseline_nominal_rmse_bar": b_nom,
        "baseline_mismatch_rmse_bar": b_mis,
        "hybrid_mismatch_rmse_bar": h_mis,
        "mismatch_degradation_pct": 100.0 * (b_mis - b_nom) / b_nom,
        "hybrid_improvement_pct": 100.0 * (b_mis - h_mis) / b_mis,
        "mprr_violation_rate": {
            "baseline_nominal": base["baseline_nominal"]["mprr_violation_rate"],
            "baseline_mismatch": base["baseline_mismatch"]["mprr_violation_rate"],
            "hybrid_mismatch": hybrid["mprr_violation_rate"],
        },
        "safety_violations": {
            "baseline_nominal": base["baseline_nominal"]["safety_violations"],
            "baseline_mismatch": base["baseline_mismatch"]["safety_violations"],
            "hybrid_mismatch": hybrid["safety_violations"],
        },
    }
    train_path = _out(cfg) / "training_summary.json"
    if train_path.exists():
        summary["training"] = json.loads(train_path.read_text())
    _write_json(_out(cfg) / "summary.json", summary)
    return summary


def run_pipeline(cfg: ExperimentConfig) -> dict:
    gen_data(cfg)
    train_plant(cfg)
    run_baseline(cfg)
    train_agent(cfg)
    evaluate(cfg)
    return report(cfg)
