"""Full controller: EKF + MPC horizontally, PID altitude, P yaw, RC output."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import FilterDiverged, SolverStall
from ..frames import yaw_rotation
from ..plant import DeadZoneConfig, PlantConfig, TrimConfig, VirtualRcCommand, apply_actuator_model
from ..sysid import PAPER_SECOND_ORDER, FirstOrderModel, ScalingParams, SecondOrderModel
from .loops import PidConfig, PidState, p_yaw, pid_altitude
from .mpc import MpcWeights, build_mpc_problem, reference_window, solve_mpc
from .observer import DisturbanceObserver, ObserverConfig
from .rc import commands_to_virtual_rc

# First-order reductions of the second-order roll/pitch responses with the DC
# gain kept equal; tau from an output-error fit on slow (4 s hold) PRBS data.
DEFAULT_MPC_ROLL = FirstOrderModel(k=0.975, tau=0.240)
DEFAULT_MPC_PITCH = FirstOrderModel(k=1.052, tau=0.256)


@dataclass(frozen=True)
class ControllerConfig:
    mpc_roll_model: FirstOrderModel = DEFAULT_MPC_ROLL
    mpc_pitch_model: FirstOrderModel = DEFAULT_MPC_PITCH
    observer_roll_model: SecondOrderModel = PAPER_SECOND_ORDER["roll"]
    observer_pitch_model: SecondOrderModel = PAPER_SECOND_ORDER["pitch"]
    weights: MpcWeights = field(default_factory=MpcWeights)
    horizon: int = 20
    u_max: float = 0.35
    pid: PidConfig = field(default_factory=PidConfig)
    k_yaw: float = 1.0
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    scaling: ScalingParams = field(default_factory=ScalingParams)
    trim: TrimConfig = field(default_factory=TrimConfig)
    deadzone: DeadZoneConfig = field(default_factory=DeadZoneConfig)
    dt: float = 0.01
    g: float = 9.81
    qp_max_iter: int = 500

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = {k: list(v) for k, v in d["weights"].items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerConfig":
        d = dict(d)
        kw = {}
        builders = {
            "mpc_roll_model": FirstOrderModel,
            "mpc_pitch_model": FirstOrderModel,
            "observer_roll_model": SecondOrderModel,
            "observer_pitch_model": SecondOrderModel,
            "pid": PidConfig,
            "observer": ObserverConfig,
            "scaling": ScalingParams,
            "trim": TrimConfig,
            "deadzone": DeadZoneConfig,
        }
        for key, build in builders.items():
            if key in d:
                kw[key] = build(**d.pop(key))
        if "weights" in d:
            kw["weights"] = MpcWeights(**{k: tuple(v) for k, v in d.pop("weights").items()})
        for key in ("horizon", "u_max", "k_yaw", "dt", "g", "qp_max_iter"):
            if key in d:
                kw[key] = d.pop(key)
        if d:
            raise ValueError(f"unknown controller config keys: {sorted(d)}")
        return cls(**kw)


@dataclass
class Reference:
    """Horizon slice of the reference: (N+1) rows each."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    yaw: float


@dataclass
class TickInfo:
    command: VirtualRcCommand
    u_world: np.ndarray
    vz_cmd: float
    yawrate_cmd: float
    predicted_cost: float
    d_est: np.ndarray
    qp_iterations: int
    stalled: bool
    pid_integral: float


class PositionController:
    """One controller per vehicle; call :meth:`tick` once per control period."""

    def __init__(self, cfg: ControllerConfig | None = None, initial_position=None):
        self.cfg = cfg = cfg or ControllerConfig()
        self.problem = build_mpc_problem(
            cfg.mpc_roll_model, cfg.mpc_pitch_model, cfg.weights,
            dt=cfg.dt, N=cfg.horizon, u_max=cfg.u_max, g=cfg.g,
        )
        z0 = np.zeros(10)
        if initial_position is not None:
            z0[:2] = np.asarray(initial_position, dtype=float)[:2]
        self.observer = DisturbanceObserver(
            cfg.observer_roll_model, cfg.observer_pitch_model, dt=cfg.dt, g=cfg.g,
            cfg=cfg.observer, z0=z0,
        )
        # the controller's belief of the autopilot stick map
        self._actuator = PlantConfig(dt=cfg.dt, scaling=cfg.scaling, trim=cfg.trim, deadzone=cfg.deadzone)
        self.pid_state = PidState()
        self.u_prev = np.zeros(2)
        self.u_applied_world = np.zeros(2)
        self._warm = None
        self.tick_index = 0

    def tick(self, sensor, ref: Reference, z_ref: float | None = None) -> TickInfo:
        cfg = self.cfg
        yaw = sensor.attitude.yaw
        try:
            state, dist = self.observer.step(sensor, self.u_applied_world)
        except FilterDiverged as exc:
            exc.tick = self.tick_index
            raise

        X_ref, U_ref = reference_window(self.problem, ref.position, ref.velocity, ref.acceleration, dist.d)
        stalled = False
        try:
            sol = solve_mpc(
                self.problem, state.as_array(), dist.d, X_ref, U_ref, self.u_prev,
                warm_start=self._warm, max_iter=cfg.qp_max_iter,
            )
            u = sol.u0
            cost, iters = sol.cost, sol.iterations
            self._warm = np.vstack([sol.U[1:], sol.U[-1:]]).ravel()
        except SolverStall:
            # hold the previous input for this tick
            u, cost, iters, stalled = self.u_prev.copy(), float("nan"), cfg.qp_max_iter, True
            self._warm = None

        z_target = ref.position[0][2] if z_ref is None else z_ref
        vz_cmd = pid_altitude(z_target, sensor.position[2], cfg.dt, self.pid_state, cfg.pid)
        r_cmd = p_yaw(ref.yaw, yaw, cfg.k_yaw)
        cmd = commands_to_virtual_rc(u[0], u[1], r_cmd, vz_cmd, cfg.scaling, cfg.trim, cfg.deadzone, yaw=yaw)

        # what the autopilot will actually track, back in the world frame
        phi_b, theta_b, _, _ = apply_actuator_model(cmd, self._actuator)
        self.u_applied_world = yaw_rotation(yaw) @ np.array([phi_b, theta_b])
        self.u_prev = np.asarray(u, dtype=float).copy()
        self.tick_index += 1
        return TickInfo(
            command=cmd, u_world=self.u_prev.copy(), vz_cmd=vz_cmd, yawrate_cmd=r_cmd,
            predicted_cost=cost, d_est=dist.d.copy(), qp_iterations=iters, stalled=stalled,
            pid_integral=self.pid_state.integral,
        )

