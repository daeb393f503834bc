import math

import numpy as np
import pytest

from vtolmpc.errors import InvalidWaypoints
from vtolmpc.harness.trajectory import Waypoint, generate_trajectory, square_waypoints

DT = 0.01


def test_identical_waypoints_constant():
    tr = generate_trajectory([Waypoint((1, 2, 3), 0.5, 0.0), Waypoint((1, 2, 3), 0.5, 4.0)], DT)
    assert np.all(tr.position == [1, 2, 3])
    assert np.all(tr.velocity == 0) and np.all(tr.acceleration == 0)
    assert np.all(tr.yaw == 0.5)


def test_single_segment_boundary_conditions():
    tr = generate_trajectory([Waypoint((0, 0, 1), 0, 0.0), Waypoint((1, 0, 1), 0, 4.0)], DT)
    assert len(tr) == 401
    assert tr.position[0] == pytest.approx([0, 0, 1])
    assert tr.position[-1] == pytest.approx([1, 0, 1])
    assert np.abs(tr.velocity[[0, -1]]).max() < 1e-9
    assert np.abs(tr.acceleration[[0, -1]]).max() < 1e-9
    # midpoint of a rest-to-rest quintic
    assert tr.position[200, 0] == pytest.approx(0.5)
    assert tr.velocity[200, 0] == pytest.approx(15 / 8 / 4.0)


def test_derivatives_consistent_with_positions():
    tr = generate_trajectory(square_waypoints(1.0, 1.0, 0.0, 10.0), DT)
    v_fd = np.gradient(tr.position, DT, axis=0)
    a_fd = np.gradient(tr.velocity, DT, axis=0)
    assert np.abs(v_fd[1:-1] - tr.velocity[1:-1]).max() < 1e-4
    assert np.abs(a_fd[1:-1] - tr.acceleration[1:-1]).max() < 1e-3


def test_square_closed_and_peak_speed():
    side, T = 1.0, 10.0
    wps = square_waypoints(side, 1.0, 30.0, T)
    assert len(wps) == 5
    assert wps[0].position == wps[-1].position
    tr = generate_trajectory(wps, DT)
    speed = np.linalg.norm(tr.velocity, axis=1)
    assert speed.max() == pytest.approx(15 / 8 * side / T, rel=1e-6)
    assert tr.position[-1] == pytest.approx([0, 0, 1])
    # held at the first waypoint before the start time
    assert np.all(tr.position[tr.t < 30.0] == [0, 0, 1])


def test_c2_continuity_at_waypoints():
    side, T = 1.0, 5.0
    tr = generate_trajectory(square_waypoints(side, 1.0, 0.0, T), DT)
    # sample-to-sample acceleration change is bounded by the quintic's peak
    # jerk (60 side / T^3, at the segment ends): no jump at the joins
    jump = np.abs(np.diff(tr.acceleration, axis=0)).max()
    assert jump <= 60 * side / T**3 * DT * (1 + 1e-9)
    for k in (500, 1000, 1500):
        assert np.abs(tr.acceleration[k]).max() < 1e-9


def test_yaw_wraps_shortest_arc():
    tr = generate_trajectory([Waypoint((0, 0, 0), 3.0, 0.0), Waypoint((0, 0, 0), -3.0, 2.0)], DT)
    # 3.0 -> -3.0 goes through pi (0.283 rad), not through zero
    d = np.abs(np.diff(np.unwrap(tr.yaw)))
    assert d.sum() == pytest.approx(2 * math.pi - 6.0, rel=1e-9)
    assert np.all((tr.yaw >= -math.pi) & (tr.yaw < math.pi))


def test_invalid_waypoints():
    with pytest.raises(InvalidWaypoints):
        generate_trajectory([Waypoint((0, 0, 0), 0, 1.0), Waypoint((1, 0, 0), 0, 1.0)], DT)
    with pytest.raises(InvalidWaypoints):
        generate_trajectory([Waypoint((0, 0, 0), 0, 2.0), Waypoint((1, 0, 0), 0, 1.0)], DT)
    with pytest.raises(InvalidWaypoints):
        generate_trajectory([Waypoint((0, 0, 0), 0, 0.0)], DT)


def test_tuple_waypoints_and_hold():
    tr = generate_trajectory([((0, 0, 1), 0.0, 0.0), ((2, 0, 1), 0.0, 1.0)], DT, t_end=3.0)
    assert tr.t[-1] == pytest.approx(3.0)
    p, v, a = tr.constant_from(len(tr) - 2, 5)
    assert np.all(p == [2, 0, 1])
    assert np.all(v == 0) and np.all(a == 0)
