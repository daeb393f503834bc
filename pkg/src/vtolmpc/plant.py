"""Closed-loop vehicle simulator (autopilot + airframe) at a fixed rate.

Each stick channel is a Virtual RC count that the autopilot saturates,
re-centres on its trim point, ignores inside a dead zone and scales into a
physical reference. Roll, pitch, yaw rate and vertical velocity then follow
their identified second-order responses. Horizontal motion uses flat-earth
near-hover kinematics driven by the thrust tilt, plus a constant wind
specific force and optional linear drag.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .discretize import zoh
from .frames import Attitude, thrust_tilt, wrap_angle
from .sysid import PAPER_SECOND_ORDER, ScalingParams, SecondOrderModel

RC_NEUTRAL = 1024.0
RC_HALF_RANGE = 660.0
RC_MIN = RC_NEUTRAL - RC_HALF_RANGE
RC_MAX = RC_NEUTRAL + RC_HALF_RANGE
MAX_TILT = math.radians(30.0)
CHANNELS = ("roll", "pitch", "yawrate", "vz")


@dataclass(frozen=True)
class VirtualRcCommand:
    roll_cmd: float = 1080.0
    pitch_cmd: float = 998.0
    yawrate_cmd: float = RC_NEUTRAL
    vz_cmd: float = RC_NEUTRAL

    def as_array(self) -> np.ndarray:
        return np.array([self.roll_cmd, self.pitch_cmd, self.yawrate_cmd, self.vz_cmd])


@dataclass(frozen=True)
class DeadZoneConfig:
    roll_pitch_halfwidth: float = 19.8
    vz_halfwidth: float = 30.5
    yawrate_halfwidth: float = 30.5

    def as_array(self) -> np.ndarray:
        h = self.roll_pitch_halfwidth
        return np.array([h, h, self.yawrate_halfwidth, self.vz_halfwidth])


@dataclass(frozen=True)
class TrimConfig:
    roll_neutral: float = 1080.0
    pitch_neutral: float = 998.0
    yawrate_neutral: float = RC_NEUTRAL
    vz_neutral: float = RC_NEUTRAL

    def __post_init__(self):
        for v in self.as_array():
            if not RC_MIN <= v <= RC_MAX:
                raise ValueError(f"trim neutral {v} outside [{RC_MIN}, {RC_MAX}]")

    def as_array(self) -> np.ndarray:
        return np.array([self.roll_neutral, self.pitch_neutral, self.yawrate_neutral, self.vz_neutral])

    def neutral_command(self) -> VirtualRcCommand:
        return VirtualRcCommand(*self.as_array())


@dataclass(frozen=True)
class NoiseConfig:
    position: float = 0.0
    velocity: float = 0.0
    attitude: float = 0.0
    rate: float = 0.0


@dataclass(frozen=True)
class PlantConfig:
    dt: float = 0.01
    g: float = 9.81
    scaling: ScalingParams = field(default_factory=ScalingParams)
    attitude_models: dict = field(default_factory=lambda: dict(PAPER_SECOND_ORDER))
    deadzone: DeadZoneConfig = field(default_factory=DeadZoneConfig)
    trim: TrimConfig = field(default_factory=TrimConfig)
    sensor_noise_std: NoiseConfig = field(default_factory=NoiseConfig)
    drag_coeff: float = 0.0
    tilt_mode: str = "tan"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        missing = set(CHANNELS) - set(self.attitude_models)
        if missing:
            raise ValueError(f"attitude_models missing channels {sorted(missing)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attitude_models"] = {k: asdict(m) for k, m in self.attitude_models.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlantConfig":
        d = dict(d)
        kw = {}
        for key in ("dt", "g", "drag_coeff", "tilt_mode"):
            if key in d:
                kw[key] = d.pop(key)
        if "scaling" in d:
            kw["scaling"] = ScalingParams(**d.pop("scaling"))
        if "attitude_models" in d:
            models = dict(PAPER_SECOND_ORDER)
            models.update({k: SecondOrderModel(**v) for k, v in d.pop("attitude_models").items()})
            kw["attitude_models"] = models
        if "deadzone" in d:
            kw["deadzone"] = DeadZoneConfig(**d.pop("deadzone"))
        if "trim" in d:
            kw["trim"] = TrimConfig(**d.pop("trim"))
        if "sensor_noise_std" in d:
            kw["sensor_noise_std"] = NoiseConfig(**d.pop("sensor_noise_std"))
        if d:
            raise ValueError(f"unknown plant config keys: {sorted(d)}")
        return cls(**kw)


@dataclass
class PlantState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    roll_state: np.ndarray = field(default_factory=lambda: np.zeros(2))
    pitch_state: np.ndarray = field(default_factory=lambda: np.zeros(2))
    yaw: float = 0.0
    yawrate_state: np.ndarray = field(default_factory=lambda: np.zeros(2))
    vz_state: np.ndarray = field(default_factory=lambda: np.zeros(2))
    wind_accel: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def attitude(self) -> Attitude:
        return Attitude(float(self.roll_state[0]), float(self.pitch_state[0]), self.yaw)

    @property
    def attitude_rates(self) -> np.ndarray:
        return np.array([self.roll_state[1], self.pitch_state[1], self.yawrate_state[0]])

    def copy(self) -> "PlantState":
        return PlantState(
            position=self.position.copy(),
            velocity=self.velocity.copy(),
            roll_state=self.roll_state.copy(),
            pitch_state=self.pitch_state.copy(),
            yaw=self.yaw,
            yawrate_state=self.yawrate_state.copy(),
            vz_state=self.vz_state.copy(),
            wind_accel=np.asarray(self.wind_accel, dtype=float).copy(),
        )


@dataclass(frozen=True)
class SensorSample:
    position: np.ndarray
    velocity: np.ndarray
    attitude: Attitude
    attitude_rates: np.ndarray


# --------------------------------------------------------------------------
# actuator


def apply_actuator_model(cmd: VirtualRcCommand, cfg: PlantConfig) -> tuple[float, float, float, float]:
    """Map Virtual RC counts to ``(phi_ref, theta_ref, yawrate_ref, vz_ref)``.

    Per channel: saturate to ``[364, 1684]``, subtract the trim neutral, zero
    anything strictly inside the dead zone, multiply by the scale.
    """
    counts = np.clip(cmd.as_array(), RC_MIN, RC_MAX)
    centred = counts - cfg.trim.as_array()
    # 1e-9 count slack so a command pushed exactly to the zone edge survives roundoff
    centred[np.abs(centred) < cfg.deadzone.as_array() - 1e-9] = 0.0
    refs = centred * cfg.scaling.as_array()
    return tuple(float(r) for r in refs)


# --------------------------------------------------------------------------
# dynamics


@lru_cache(maxsize=64)
def _discrete_channel(model: SecondOrderModel, dt: float):
    A, B = model.state_space()
    return zoh(A, B, dt)


def _advance(x: np.ndarray, model: SecondOrderModel, ref: float, dt: float) -> np.ndarray:
    Ad, Bd = _discrete_channel(model, dt)
    return Ad @ x + Bd[:, 0] * ref


def _clamp_tilt(x: np.ndarray) -> np.ndarray:
    if x[0] > MAX_TILT:
        x[0] = MAX_TILT
        x[1] = min(x[1], 0.0)
    elif x[0] < -MAX_TILT:
        x[0] = -MAX_TILT
        x[1] = max(x[1], 0.0)
    return x


def step_plant(state: PlantState, cmd: VirtualRcCommand, cfg: PlantConfig) -> PlantState:
    """Advance the vehicle by one period ``cfg.dt``; returns a new state."""
    dt = cfg.dt
    phi_ref, theta_ref, r_ref, vz_ref = apply_actuator_model(cmd, cfg)
    m = cfg.attitude_models
    s = state.copy()

    s.roll_state = _clamp_tilt(_advance(state.roll_state, m["roll"], phi_ref, dt))
    s.pitch_state = _clamp_tilt(_advance(state.pitch_state, m["pitch"], theta_ref, dt))
    s.yawrate_state = _advance(state.yawrate_state, m["yawrate"], r_ref, dt)
    s.vz_state = _advance(state.vz_state, m["vz"], vz_ref, dt)

    s.yaw = wrap_angle(state.yaw + s.yawrate_state[0] * dt)

    tilt = thrust_tilt(s.roll_state[0], s.pitch_state[0], s.yaw, cfg.tilt_mode)
    a_xy = cfg.g * tilt + s.wind_accel - cfg.drag_coeff * state.velocity[:2]
    s.velocity[:2] = state.velocity[:2] + a_xy * dt
    s.velocity[2] = s.vz_state[0]
    s.position = state.position + s.velocity * dt
    return s


def _as_rng(rng) -> Optional[np.random.Generator]:
    if rng is None or isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def read_sensors(state: PlantState, cfg: PlantConfig, rng=None) -> SensorSample:
    """Noisy measurement of pose, velocity, attitude and attitude rates.

    ``rng`` may be a seed or a ``numpy.random.Generator``; pass the same
    generator across calls to get an independent noise sequence.
    """
    n = cfg.sensor_noise_std
    rng = _as_rng(rng)

    def noisy(x, std):
        x = np.asarray(x, dtype=float).copy()
        if std > 0:
            if rng is None:
                raise ValueError("sensor noise is configured but no rng/seed was given")
            x = x + rng.normal(0.0, std, x.shape)
        return x

    pos = noisy(state.position, n.position)
    vel = noisy(state.velocity, n.velocity)
    att = noisy([state.roll_state[0], state.pitch_state[0], state.yaw], n.attitude)
    rates = noisy(state.attitude_rates, n.rate)
    return SensorSample(pos, vel, Attitude(att[0], att[1], wrap_angle(att[2])), rates)


class Plant:
    """Mutable single-owner wrapper around :func:`step_plant`."""

    def __init__(self, cfg: PlantConfig | None = None, state: PlantState | None = None, seed=None):
        self.cfg = cfg or PlantConfig()
        self.state = state.copy() if state is not None else PlantState()
        self.rng = np.random.default_rng(seed)
        self.t = 0.0
        self.ticks = 0

    def step(self, cmd: VirtualRcCommand) -> PlantState:
        self.state = step_plant(self.state, cmd, self.cfg)
        self.ticks += 1
        self.t = self.ticks * self.cfg.dt
        return self.state

    def sense(self) -> SensorSample:
        return read_sensors(self.state, self.cfg, self.rng)

    def set_wind(self, accel) -> None:
        self.state = replace(self.state, wind_accel=np.asarray(accel, dtype=float).copy())


# --------------------------------------------------------------------------
# CSV

STATE_COLUMNS = [
    "t", "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw",
    "cmd_roll", "cmd_pitch", "cmd_yawrate", "cmd_vz",
]


def fmt(x) -> str:
    return format(float(x), ".10g")


def state_row(t: float, state: PlantState, cmd: VirtualRcCommand) -> list:
    return [
        t, *state.position, *state.velocity,
        state.roll_state[0], state.pitch_state[0], state.yaw,
        *cmd.as_array(),
    ]


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_command_csv(path) -> tuple[np.ndarray, list[VirtualRcCommand]]:
    """Read ``t,cmd_roll,cmd_pitch,cmd_yawrate,cmd_vz`` rows."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = ["t", "cmd_roll", "cmd_pitch", "cmd_yawrate", "cmd_vz"]
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in need):
            raise ValueError(f"{path}: header must contain {','.join(need)}")
        t, cmds = [], []
        for row in reader:
            t.append(float(row["t"]))
            cmds.append(VirtualRcCommand(*(float(row[c]) for c in need[1:])))
    return np.array(t), cmds


def simulate_open_loop(cmds, cfg: PlantConfig | None = None, state: PlantState | None = None):
    """Run the plant on a command sequence; returns CSV-ready rows."""
    plant = Plant(cfg, state)
    rows = [state_row(0.0, plant.state, cmds[0] if cmds else plant.cfg.trim.neutral_command())]
    for cmd in cmds:
        plant.step(cmd)
        rows.append(state_row(plant.t, plant.state, cmd))
    return rows
