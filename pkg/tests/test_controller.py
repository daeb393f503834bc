import numpy as np
import pytest

from vtolmpc.control import ControllerConfig, ObserverConfig, PositionController, Reference
from vtolmpc.control.mpc import MpcWeights
from vtolmpc.errors import FilterDiverged
from vtolmpc.plant import RC_MAX, RC_MIN, PlantConfig, PlantState, read_sensors, step_plant

PLANT = PlantConfig()


def hold_reference(p, n=21, yaw=0.0):
    pos = np.tile(np.asarray(p, dtype=float), (n, 1))
    return Reference(pos, np.zeros((n, 3)), np.zeros((n, 3)), yaw)


def test_config_round_trip():
    cfg = ControllerConfig(weights=MpcWeights(r=(10, 10)), horizon=15, k_yaw=0.5)
    back = ControllerConfig.from_dict(cfg.to_dict())
    assert back == cfg
    with pytest.raises(ValueError):
        ControllerConfig.from_dict({"gains": 1})


def test_hover_at_reference_outputs_neutral():
    ctrl = PositionController(initial_position=(0, 0, 1))
    s = PlantState(position=np.array([0.0, 0.0, 1.0]))
    for _ in range(50):
        info = ctrl.tick(read_sensors(s, PLANT), hold_reference((0, 0, 1)))
        assert info.command == PLANT.trim.neutral_command()
        s = step_plant(s, info.command, PLANT)
    assert info.qp_iterations >= 1 and not info.stalled


def test_closed_loop_reaches_offset_target():
    ctrl = PositionController(initial_position=(0, 0, 1))
    s = PlantState(position=np.array([0.0, 0.0, 1.0]))
    ref = hold_reference((0.5, -0.3, 1.2), yaw=0.4)
    err = []
    for _ in range(2500):
        info = ctrl.tick(read_sensors(s, PLANT), ref)
        c = info.command.as_array()
        assert np.all((c >= RC_MIN) & (c <= RC_MAX))
        assert np.all(np.abs(info.u_world) <= ctrl.cfg.u_max + 1e-12)
        s = step_plant(s, info.command, PLANT)
        err.append(np.abs(np.r_[s.position - [0.5, -0.3, 1.2], s.yaw - 0.4]))
    # the dead-zone push leaves a small bounded chatter, widest on vz
    worst = np.max(err[-500:], axis=0)
    assert np.all(worst[[0, 1, 3]] < 3e-3)
    assert worst[2] < 0.015


def test_solver_stall_holds_previous_input():
    ctrl = PositionController(ControllerConfig(qp_max_iter=1), initial_position=(0, 0, 1))
    s = PlantState(position=np.array([0.0, 0.0, 1.0]))
    info = ctrl.tick(read_sensors(s, PLANT), hold_reference((2.0, 2.0, 1.0)))
    assert info.stalled
    assert np.array_equal(info.u_world, np.zeros(2))
    assert np.isnan(info.predicted_cost)


def test_filter_divergence_carries_tick():
    cfg = ControllerConfig(observer=ObserverConfig(diverge_trace=1e-3))
    ctrl = PositionController(cfg)
    with pytest.raises(FilterDiverged) as info:
        ctrl.tick(read_sensors(PlantState(), PLANT), hold_reference((0, 0, 0)))
    assert info.value.tick == 0
