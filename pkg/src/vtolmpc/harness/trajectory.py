"""Waypoint reference generation with quintic (rest-to-rest) segments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidWaypoints
from ..frames import wrap_angle


@dataclass(frozen=True)
class Waypoint:
    position: tuple
    yaw: float
    arrival_t: float


@dataclass
class ReferenceTrajectory:
    t: np.ndarray
    position: np.ndarray      # (T, 3)
    velocity: np.ndarray      # (T, 3)
    acceleration: np.ndarray  # (T, 3)
    yaw: np.ndarray           # (T,)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def __len__(self):
        return self.t.size

    def constant_from(self, i: int, n: int):
        """Rows ``i .. i+n-1``, repeating the last sample past the end."""
        idx = np.minimum(np.arange(i, i + n), self.t.size - 1)
        # past the end the vehicle should hold still, not keep accelerating
        past = np.arange(i, i + n) >= self.t.size
        vel = self.velocity[idx].copy()
        acc = self.acceleration[idx].copy()
        vel[past] = 0.0
        acc[past] = 0.0
        return self.position[idx], vel, acc


def _quintic(s):
    """Blend 10s^3 - 15s^4 + 6s^5 and its first two derivatives in s."""
    s = np.clip(s, 0.0, 1.0)
    p = s**3 * (10 - 15 * s + 6 * s**2)
    dp = 30 * s**2 * (1 - s) ** 2
    ddp = 60 * s * (1 - s) * (1 - 2 * s)
    return p, dp, ddp


def generate_trajectory(waypoints, dt: float, t_end: float | None = None) -> ReferenceTrajectory:
    """Sample a piecewise-quintic trajectory through ``waypoints`` every ``dt``.

    Each segment starts and ends at rest (zero velocity and acceleration), so
    the result is C2 at every waypoint. Yaw is interpolated linearly along the
    shortest arc. Before the first arrival time the first waypoint is held;
    after the last one the last waypoint is held until ``t_end``.
    """
    wps = [w if isinstance(w, Waypoint) else Waypoint(tuple(w[0]), float(w[1]), float(w[2])) for w in waypoints]
    if len(wps) < 2:
        raise InvalidWaypoints("need at least two waypoints")
    times = np.array([w.arrival_t for w in wps])
    if np.any(np.diff(times) <= 0):
        raise InvalidWaypoints(f"arrival times must be strictly increasing: {times.tolist()}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    t_end = times[-1] if t_end is None else max(t_end, times[-1])
    n = int(round(t_end / dt)) + 1
    t = np.arange(n) * dt
    P = np.array([w.position for w in wps], dtype=float)
    yaws = np.array([w.yaw for w in wps], dtype=float)

    pos = np.tile(P[0], (n, 1))
    vel = np.zeros((n, 3))
    acc = np.zeros((n, 3))
    yaw = np.full(n, wrap_angle(yaws[0]))
    for j in range(len(wps) - 1):
        t0, t1 = times[j], times[j + 1]
        T = t1 - t0
        mask = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
        s = (t[mask] - t0) / T
        b, db, ddb = _quintic(s)
        delta = P[j + 1] - P[j]
        pos[mask] = P[j] + np.outer(b, delta)
        vel[mask] = np.outer(db / T, delta)
        acc[mask] = np.outer(ddb / T**2, delta)
        dyaw = wrap_angle(yaws[j + 1] - yaws[j])
        yaw[mask] = [wrap_angle(yaws[j] + si * dyaw) for si in np.clip(s, 0, 1)]
    after = t > times[-1] + 1e-12
    pos[after] = P[-1]
    yaw[after] = wrap_angle(yaws[-1])
    return ReferenceTrajectory(t, pos, vel, acc, yaw)


def square_waypoints(side: float = 1.0, z: float = 1.0, t_start: float = 0.0, segment_t: float = 10.0, origin=(0.0, 0.0)):
    """Closed square path starting and ending at ``origin``."""
    x0, y0 = origin
    corners = [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side), (x0, y0)]
    return [Waypoint((cx, cy, z), 0.0, t_start + i * segment_t) for i, (cx, cy) in enumerate(corners)]
