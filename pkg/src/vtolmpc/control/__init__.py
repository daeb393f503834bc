from .controller import ControllerConfig, PositionController, Reference, TickInfo
from .loops import PidConfig, PidState, p_yaw, pid_altitude
from .mpc import MpcProblem, MpcSolution, MpcWeights, build_mpc_problem, reference_window, solve_mpc
from .observer import (
    DisturbanceEstimate,
    DisturbanceObserver,
    MpcState,
    ObserverConfig,
    ekf_observer_step,
)
from .rc import commands_to_virtual_rc
