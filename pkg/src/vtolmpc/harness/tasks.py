"""Closed-loop experiment tasks: hover, step response, trajectory following."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from ..control.controller import ControllerConfig, PositionController, Reference
from ..frames import wrap_angle
from ..plant import STATE_COLUMNS, PlantConfig, PlantState, read_sensors, state_row, step_plant, write_csv
from .metrics import RmsReport, compute_rms
from .trajectory import ReferenceTrajectory, Waypoint, generate_trajectory, square_waypoints

TASK_KINDS = ("hover", "step", "trajectory")

LOG_COLUMNS = STATE_COLUMNS + [
    "ref_x", "ref_y", "ref_z", "ref_yaw",
    "predicted_cost", "d_est_x", "d_est_y", "pid_integral", "qp_iterations", "stalled",
]


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "hover"
    duration: float = 75.0
    eval_window: tuple = (15.0, 75.0)
    wind: tuple = (0.0, 0.0)
    start: tuple = (0.0, 0.0, 1.0, 0.0)
    step_target: tuple = (2.0, 0.0, 1.0, 0.0)
    step_time: float = 20.0
    waypoints: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}; expected one of {TASK_KINDS}")
        t0, t1 = self.eval_window
        if not (0.0 <= t0 <= t1 <= self.duration):
            raise ValueError(f"eval_window {self.eval_window} must lie inside [0, {self.duration}]")

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        return cls(**_normalize_task_fields(d))


def _normalize_task_fields(d: dict) -> dict:
    """JSON lists to tuples, waypoint dicts to :class:`Waypoint`."""
    d = dict(d)
    if "waypoints" in d:
        d["waypoints"] = tuple(
            w if isinstance(w, Waypoint)
            else Waypoint(tuple(w["position"]), float(w.get("yaw", 0.0)), float(w["arrival_t"]))
            for w in d["waypoints"]
        )
    for key in ("eval_window", "wind", "start", "step_target"):
        if key in d:
            d[key] = tuple(float(v) for v in d[key])
    return d


def task_from_overrides(kind: str, overrides: dict) -> TaskSpec:
    """Preset for ``kind`` with config/CLI overrides applied.

    Shortening ``duration`` without giving a window clips the preset window.
    """
    d = _normalize_task_fields({k: v for k, v in overrides.items() if k != "kind"})
    base = default_task(kind)
    if "duration" in d and "eval_window" not in d:
        t0, t1 = base.eval_window
        dur = d["duration"]
        d["eval_window"] = (min(t0, dur), min(t1, dur)) if t1 <= dur else (min(t0, dur), dur)
    return replace(base, **d)


def default_task(kind: str, **overrides) -> TaskSpec:
    """Task presets; evaluation windows skip launch transients."""
    if kind == "hover":
        spec = TaskSpec("hover", duration=75.0, eval_window=(15.0, 75.0))
    elif kind == "step":
        spec = TaskSpec("step", duration=120.0, eval_window=(20.0, 120.0), step_time=20.0)
    elif kind == "trajectory":
        spec = TaskSpec(
            "trajectory", duration=80.0, eval_window=(30.0, 80.0),
            waypoints=tuple(square_waypoints(1.0, 1.0, t_start=30.0, segment_t=10.0)),
        )
    else:
        raise ValueError(f"unknown task kind {kind!r}")
    return replace(spec, **overrides)


def build_reference(spec: TaskSpec, dt: float) -> ReferenceTrajectory:
    n = int(round(spec.duration / dt)) + 1
    t = np.arange(n) * dt
    start = np.asarray(spec.start[:3], dtype=float)
    if spec.kind == "trajectory":
        if not spec.waypoints:
            raise ValueError("trajectory task needs waypoints")
        traj = generate_trajectory(spec.waypoints, dt, t_end=spec.duration)
        return ReferenceTrajectory(t, traj.position[:n], traj.velocity[:n], traj.acceleration[:n], traj.yaw[:n])
    pos = np.tile(start, (n, 1))
    yaw = np.full(n, wrap_angle(spec.start[3]))
    if spec.kind == "step":
        after = t >= spec.step_time - 1e-9
        pos[after] = np.asarray(spec.step_target[:3], dtype=float)
        yaw[after] = wrap_angle(spec.step_target[3])
    return ReferenceTrajectory(t, pos, np.zeros((n, 3)), np.zeros((n, 3)), yaw)


@dataclass
class TaskResult:
    spec: TaskSpec
    columns: list
    rows: list
    report: RmsReport
    stalls: int = 0
    extra: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)


def run_task(spec: TaskSpec, plant_cfg: PlantConfig | None = None, ctrl_cfg: ControllerConfig | None = None) -> TaskResult:
    """Simulate one task in closed loop at the plant rate and score it.

    The vehicle starts at rest at ``spec.start`` with the wind already on.
    Roll and pitch RMS are left out for step and trajectory tasks, where the
    vehicle has to tilt to translate.
    """
    plant_cfg = plant_cfg or PlantConfig()
    ctrl_cfg = ctrl_cfg or ControllerConfig(dt=plant_cfg.dt, g=plant_cfg.g)
    dt = plant_cfg.dt
    ref = build_reference(spec, dt)
    rng = np.random.default_rng(spec.seed)

    state = PlantState(
        position=np.asarray(spec.start[:3], dtype=float).copy(),
        yaw=wrap_angle(spec.start[3]),
        wind_accel=np.asarray(spec.wind, dtype=float).copy(),
    )
    ctrl = PositionController(ctrl_cfg, initial_position=spec.start[:3])
    N = ctrl_cfg.horizon
    rows = []
    stalls = 0
    for i in range(len(ref)):
        sensor = read_sensors(state, plant_cfg, rng)
        p, v, a = ref.constant_from(i, N + 1)
        info = ctrl.tick(sensor, Reference(p, v, a, float(ref.yaw[i])))
        stalls += int(info.stalled)
        rows.append(
            state_row(ref.t[i], state, info.command)
            + [*ref.position[i], ref.yaw[i], info.predicted_cost, *info.d_est,
               info.pid_integral, info.qp_iterations, int(info.stalled)]
        )
        state = step_plant(state, info.command, plant_cfg)

    result = TaskResult(spec, list(LOG_COLUMNS), rows, None, stalls)
    result.report = report_from_rows(result.columns, rows, spec.eval_window, include_attitude=spec.kind == "hover")
    return result


def report_from_rows(columns, rows, window, include_attitude=True) -> RmsReport:
    data = np.array(rows, dtype=float)
    c = {name: data[:, i] for i, name in enumerate(columns)}
    actual = np.column_stack([c["x"], c["y"], c["z"], c["roll"], c["pitch"], c["yaw"]])
    zeros = np.zeros_like(c["t"])
    reference = np.column_stack([c["ref_x"], c["ref_y"], c["ref_z"], zeros, zeros, c["ref_yaw"]])
    return compute_rms(c["t"], actual, reference, window, include_attitude=include_attitude)


PLOT_CHANNELS = {
    "x": ("ref_x", "x"),
    "y": ("ref_y", "y"),
    "z": ("ref_z", "z"),
    "yaw": ("ref_yaw", "yaw"),
}


def write_outputs(result: TaskResult, out_dir) -> dict:
    """Write ``log.csv``, ``report.json`` and per-channel ``plot_<ch>.csv``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"log": os.path.join(out_dir, "log.csv"), "report": os.path.join(out_dir, "report.json")}
    write_csv(paths["log"], result.columns, result.rows)
    with open(paths["report"], "w") as fh:
        fh.write(result.report.to_json() + "\n")
    t = result.column("t")
    for ch, (ref_col, act_col) in PLOT_CHANNELS.items():
        path = os.path.join(out_dir, f"plot_{ch}.csv")
        write_csv(path, ["t", "ref", "actual"], zip(t, result.column(ref_col), result.column(act_col)))
        paths[f"plot_{ch}"] = path
    return paths


def load_config(path) -> tuple[PlantConfig, ControllerConfig, dict]:
    """Read the JSON config with optional ``plant``, ``controller``, ``task`` sections."""
    with open(path) as fh:
        data = json.load(fh)
    unknown = set(data) - {"plant", "controller", "task"}
    if unknown:
        raise ValueError(f"{path}: unknown config sections {sorted(unknown)}")
    plant = PlantConfig.from_dict(data.get("plant", {}))
    ctrl_d = dict(data.get("controller", {}))
    ctrl_d.setdefault("dt", plant.dt)
    ctrl_d.setdefault("g", plant.g)
    ctrl = ControllerConfig.from_dict(ctrl_d)
    return plant, ctrl, dict(data.get("task", {}))


def default_config_dict() -> dict:
    return {
        "plant": PlantConfig().to_dict(),
        "controller": ControllerConfig().to_dict(),
        "task": {},
    }
