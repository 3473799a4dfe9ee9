"""Experiment orchestration: config layering, artifact export, comparisons.

An experiment spec selects one kind of run (train, dp-solve, evaluate,
transfer, compare, report), the case, seeds, and any overrides.  Specs are
assembled by layering built-in defaults, an optional JSON config file, and
command-line flags, in that order.  Every run writes its artifacts plus a
manifest listing each output file with a content hash; identical specs
reproduce identical hashes.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import ddpg, dp
from .configio import digest, to_jsonable
from .env import EnvConfig
from .nn import load_mlp, save_mlp
from .plant import PlantConfig, ScenarioConfig
from .trajectory import Trajectory

__all__ = [
    "KINDS",
    "ExperimentError",
    "ExperimentSpec",
    "ComparisonMetrics",
    "compare",
    "export_csv",
    "load_csv",
    "merge_config",
    "build_spec",
    "build_env_config",
    "run_experiment",
]

KINDS = ("train", "dp-solve", "evaluate", "transfer", "compare", "report")

# Auto table persistence threshold for dp-solve (bytes of value+policy stacks).
TABLE_SAVE_LIMIT = 200_000_000


class ExperimentError(RuntimeError):
    """A spec or input problem that should surface as a CLI error."""


DEFAULT_SPEC = {
    "kind": None,
    "case": 1,
    "seed": 1,
    "out": "out",
    "env": {},
    "agent": {},
    "dp": {"grid_scale": 1.0, "value_dtype": None, "save_tables": None},
    "inputs": {},
}


def merge_config(base: dict, override: dict) -> dict:
    """Recursive dict merge; scalar/list leaves from ``override`` win."""
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = merge_config(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated, effective configuration of one experiment run."""

    kind: str
    case: int
    seed: int
    out: str
    env: dict
    agent: dict
    dp: dict
    inputs: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "case": self.case,
            "seed": self.seed,
            "out": self.out,
            "env": self.env,
            "agent": self.agent,
            "dp": self.dp,
            "inputs": self.inputs,
        }


def build_spec(layers: list[dict]) -> ExperimentSpec:
    """Layer config dicts over the defaults (later wins) and validate."""
    cfg = DEFAULT_SPEC
    for layer in layers:
        cfg = merge_config(cfg, layer)
    if cfg["kind"] not in KINDS:
        raise ExperimentError(f"kind must be one of {KINDS}, got {cfg['kind']!r}")
    if cfg["kind"] == "train" and "seed" not in _collected_keys(layers):
        raise ExperimentError("train runs require an explicit seed")
    if cfg["case"] not in (1, 2, 3, 4):
        raise ExperimentError(f"case must be 1..4, got {cfg['case']}")
    return ExperimentSpec(
        kind=cfg["kind"],
        case=int(cfg["case"]),
        seed=int(cfg["seed"]),
        out=str(cfg["out"]),
        env=cfg["env"],
        agent=cfg["agent"],
        dp=cfg["dp"],
        inputs=cfg["inputs"],
    )


def _collected_keys(layers: list[dict]) -> set:
    keys = set()
    for layer in layers:
        keys.update(layer.keys())
    return keys


def build_env_config(case: int, overrides: dict) -> EnvConfig:
    """EnvConfig from the case id plus JSON-style overrides."""
    overrides = dict(overrides)
    plant_over = dict(overrides.pop("plant", {}))
    plant_over.pop("lag_enabled", None)  # the case decides the switches
    plant_over.pop("delay_enabled", None)
    scen_over = dict(overrides.pop("scenario", {}))
    try:
        return EnvConfig.for_case(
            case,
            plant=PlantConfig(**plant_over),
            scenario=ScenarioConfig(**scen_over),
            **overrides,
        )
    except (TypeError, ValueError) as err:
        raise ExperimentError(f"bad environment config: {err}") from err


@dataclass
class ComparisonMetrics:
    """Cost/quality comparison of a controller trajectory against the DP one."""

    reward_drl: float
    reward_dp: float
    cost_drl: float
    cost_dp: float
    relative_cost_gap: float
    last5s_mean_abs_e: float
    last5s_max_e: float
    last5s_min_e: float
    zero_crossings: int
    peak_to_peak: float
    oscillation: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compare(drl: Trajectory, dp_traj: Trajectory, cfg: EnvConfig) -> ComparisonMetrics:
    """Episode totals plus steady-state statistics over the final five seconds.

    The oscillation flag marks a wavy steady state: the error crosses zero at
    least twice in the window with more than 0.2 m peak to peak.
    """
    if len(drl) != len(dp_traj):
        raise ValueError(f"trajectory lengths differ: {len(drl)} vs {len(dp_traj)}")
    p = cfg.plant
    cost_drl = drl.episode_cost(cfg.alpha, cfg.beta, cfg.e_nmax, p.u_max, p.dt)
    cost_dp = dp_traj.episode_cost(cfg.alpha, cfg.beta, cfg.e_nmax, p.u_max, p.dt)
    if cost_dp <= 0:
        raise ValueError("benchmark cost must be positive for a relative gap")
    n = min(len(drl), int(round(5.0 / p.dt)))
    tail = drl.e[-n:]
    crossings = int(np.count_nonzero(tail[:-1] * tail[1:] < 0))
    ptp = float(tail.max() - tail.min())
    return ComparisonMetrics(
        reward_drl=drl.episode_reward,
        reward_dp=dp_traj.episode_reward,
        cost_drl=cost_drl,
        cost_dp=cost_dp,
        relative_cost_gap=(cost_drl - cost_dp) / cost_dp,
        last5s_mean_abs_e=float(np.abs(tail).mean()),
        last5s_max_e=float(tail.max()),
        last5s_min_e=float(tail.min()),
        zero_crossings=crossings,
        peak_to_peak=ptp,
        oscillation=bool(crossings >= 2 and ptp > 0.2),
    )


def export_csv(traj: Trajectory, path: str) -> None:
    traj.save_csv(path)


def load_csv(path: str) -> Trajectory:
    return Trajectory.load_csv(path)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, sort_keys=True, indent=1)
        fh.write("\n")


class _Workspace:
    """Tracks files written by a run so failures can clean up after themselves."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.files: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.files.append(p)
        return p

    def discard(self) -> None:
        for p in self.files:
            if os.path.exists(p):
                os.remove(p)

    def manifest(self, spec: ExperimentSpec) -> dict:
        spec_dict = spec.to_dict()
        outputs = [
            {
                "path": os.path.relpath(p, self.out_dir),
                "sha256": _sha256(p),
                "bytes": os.path.getsize(p),
            }
            for p in sorted(self.files)
            if os.path.exists(p)
        ]
        manifest = {
            "spec": spec_dict,
            "config_hash": digest(spec_dict),
            "outputs": outputs,
        }
        path = os.path.join(self.out_dir, "manifest.json")
        _write_json(path, manifest)
        return manifest


def _dp_value_dtype(spec: ExperimentSpec):
    name = spec.dp.get("value_dtype")
    if name is None:
        return np.float64 if spec.case == 1 else np.float32
    if name in ("float32", "float64"):
        return np.dtype(name).type
    raise ExperimentError(f"value_dtype must be float32 or float64, got {name!r}")


def _run_train(spec: ExperimentSpec, ws: _Workspace) -> dict:
    env_cfg = build_env_config(spec.case, spec.env)
    try:
        agent_cfg = ddpg.AgentConfig.for_case(spec.case, seed=spec.seed, **spec.agent)
    except (TypeError, ValueError) as err:
        raise ExperimentError(f"bad agent config: {err}") from err
    result = ddpg.train(env_cfg, agent_cfg)
    actor_path = ws.path("actor.npz")
    save_mlp(
        result.agent.actor,
        actor_path,
        extra_meta={
            "case": spec.case,
            "seed": spec.seed,
            "env_config_hash": digest(env_cfg),
            "agent_cfg": to_jsonable(agent_cfg),
        },
    )
    result.curve.save_csv(ws.path("learning_curve.csv"))
    ev = ddpg.evaluate(result.agent.actor, env_cfg)
    ev.rollout.trajectory.save_csv(ws.path("trajectory.csv"))
    metrics = {
        "kind": "train",
        "case": spec.case,
        "seed": spec.seed,
        "selected_step": result.selected_step,
        **ev.metrics,
    }
    _write_json(ws.path("metrics.json"), metrics)
    return metrics


def _run_dp_solve(spec: ExperimentSpec, ws: _Workspace) -> dict:
    env_cfg = build_env_config(spec.case, spec.env)
    grid, actions = dp.default_grid(env_cfg, scale=float(spec.dp.get("grid_scale", 1.0)))
    horizon = env_cfg.scenario.episode_len
    solution = dp.backward_induction(
        grid, actions, horizon, env_cfg, value_dtype=_dp_value_dtype(spec)
    )
    ro = dp.dp_rollout(solution)
    ro.result.trajectory.save_csv(ws.path("dp_trajectory.csv"))
    table_bytes = solution.values.nbytes + solution.policy.nbytes
    save_tables = spec.dp.get("save_tables")
    if save_tables is None:
        save_tables = table_bytes <= TABLE_SAVE_LIMIT
    if save_tables:
        dp.save_solution(solution, ws.path("dp_tables.npz"))
    metrics = {
        "kind": "dp-solve",
        "case": spec.case,
        "start_value": solution.start_value(),
        "rollout_cost": ro.result.episode_cost,
        "rollout_reward": ro.result.episode_reward,
        "clamped_lookups": ro.clamped_lookups,
        "escaped_transitions_per_step": solution.diagnostics.escaped_transitions_per_step,
        "transitions_per_step": solution.diagnostics.transitions_per_step,
        "e_spacing": grid.e.spacing,
        "tables_saved": bool(save_tables),
        "table_bytes": int(table_bytes),
        **_tail_stats(ro.result.trajectory, env_cfg),
    }
    _write_json(ws.path("metrics.json"), metrics)
    return metrics


def _tail_stats(traj: Trajectory, env_cfg: EnvConfig) -> dict:
    n = min(len(traj), int(round(5.0 / env_cfg.plant.dt)))
    tail = traj.e[-n:]
    return {
        "last5s_mean_abs_e": float(np.abs(tail).mean()),
        "last5s_max_e": float(tail.max()),
        "last5s_min_e": float(tail.min()),
    }


def _load_actor(spec: ExperimentSpec) -> tuple:
    path = spec.inputs.get("actor")
    if not path:
        raise ExperimentError("inputs.actor (checkpoint path) is required")
    if not os.path.exists(path):
        raise ExperimentError(f"actor checkpoint not found: {path}")
    actor, meta = load_mlp(path)
    return actor, meta


def _run_evaluate(spec: ExperimentSpec, ws: _Workspace) -> dict:
    env_cfg = build_env_config(spec.case, spec.env)
    actor, meta = _load_actor(spec)
    try:
        ev = ddpg.evaluate(actor, env_cfg)
    except Exception as err:
        raise ExperimentError(str(err)) from err
    ev.rollout.trajectory.save_csv(ws.path("trajectory.csv"))
    metrics = {
        "kind": "evaluate",
        "case": spec.case,
        "checkpoint_case": meta.get("case"),
        **ev.metrics,
    }
    _write_json(ws.path("metrics.json"), metrics)
    return metrics


def _run_transfer(spec: ExperimentSpec, ws: _Workspace) -> dict:
    env_cfg = build_env_config(spec.case, spec.env)
    actor, meta = _load_actor(spec)
    source_case = spec.inputs.get("source_case", meta.get("case"))
    if source_case is None:
        raise ExperimentError("inputs.source_case unknown (not in checkpoint metadata)")
    try:
        policy = ddpg.cross_case_adapter(actor, int(source_case), env_cfg)
    except Exception as err:
        raise ExperimentError(str(err)) from err
    ev = ddpg.evaluate_policy(policy, env_cfg)
    ev.rollout.trajectory.save_csv(ws.path("trajectory.csv"))
    metrics = {
        "kind": "transfer",
        "source_case": int(source_case),
        "target_case": spec.case,
        **ev.metrics,
    }
    _write_json(ws.path("metrics.json"), metrics)
    return metrics


def _run_compare(spec: ExperimentSpec, ws: _Workspace) -> dict:
    drl_path = spec.inputs.get("drl_trajectory")
    dp_path = spec.inputs.get("dp_trajectory")
    if not drl_path or not dp_path:
        raise ExperimentError("compare needs inputs.drl_trajectory and inputs.dp_trajectory")
    for p in (drl_path, dp_path):
        if not os.path.exists(p):
            raise ExperimentError(f"trajectory not found: {p}")
    env_cfg = build_env_config(spec.case, spec.env)
    metrics_obj = compare(load_csv(drl_path), load_csv(dp_path), env_cfg)
    metrics = {"kind": "compare", "case": spec.case, **metrics_obj.to_dict()}
    _write_json(ws.path("metrics.json"), metrics)
    return metrics


def _run_report(spec: ExperimentSpec, ws: _Workspace) -> dict:
    root = spec.inputs.get("dir")
    if not root or not os.path.isdir(root):
        raise ExperimentError("report needs inputs.dir (a directory of run outputs)")
    found = {}
    for dirpath, _dirnames, filenames in sorted(os.walk(root)):
        if "metrics.json" in filenames:
            p = os.path.join(dirpath, "metrics.json")
            with open(p) as fh:
                found[os.path.relpath(p, root)] = json.load(fh)
    report = {"kind": "report", "root": root, "runs": found}
    _write_json(ws.path("report.json"), report)
    return report


_RUNNERS = {
    "train": _run_train,
    "dp-solve": _run_dp_solve,
    "evaluate": _run_evaluate,
    "transfer": _run_transfer,
    "compare": _run_compare,
    "report": _run_report,
}


def run_experiment(spec: ExperimentSpec) -> dict:
    """Execute a spec, write its artifacts, and return the manifest."""
    ws = _Workspace(spec.out)
    try:
        _RUNNERS[spec.kind](spec, ws)
    except Exception:
        ws.discard()
        raise
    return ws.manifest(spec)
