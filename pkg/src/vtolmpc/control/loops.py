"""Altitude PID (velocity command) and proportional yaw loop."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..frames import wrap_angle


@dataclass(frozen=True)
class PidConfig:
    # Ki = 6.19 with these Kp/Kd is unstable on the second-order vz model
    # (a ~2.3 s oscillation held only by the integral clamp); 1.5 gives
    # a damping ratio near 0.57.
    Kp: float = 1.963
    Ki: float = 1.5
    Kd: float = 0.156
    I_min: float = -0.2
    I_max: float = 0.2
    derivative_cutoff_hz: float = 5.0

    def __post_init__(self):
        if not self.I_min < self.I_max:
            raise ValueError("I_min must be below I_max")


@dataclass
class PidState:
    integral: float = 0.0  # the clamped Ki * integral(e) term
    filtered_error: float = 0.0
    initialized: bool = False
    derivative: float = 0.0


def pid_altitude(z_ref: float, z: float, dt: float, state: PidState, cfg: PidConfig = PidConfig()) -> float:
    """Vertical velocity command from the height error; updates ``state`` in place.

    The clamp acts on the integral contribution ``Ki * integral(e)`` itself.
    The derivative acts on the error after a first-order low-pass.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    e = z_ref - z
    state.integral = min(cfg.I_max, max(cfg.I_min, state.integral + cfg.Ki * e * dt))
    if not state.initialized:
        state.filtered_error = e
        state.initialized = True
        state.derivative = 0.0
    else:
        rc = 1.0 / (2.0 * math.pi * cfg.derivative_cutoff_hz)
        alpha = dt / (dt + rc)
        prev = state.filtered_error
        state.filtered_error = prev + alpha * (e - prev)
        state.derivative = (state.filtered_error - prev) / dt
    return cfg.Kp * e + state.integral + cfg.Kd * state.derivative


def p_yaw(yaw_ref: float, yaw: float, K_psi: float = 1.0) -> float:
    """Yaw-rate command proportional to the wrapped heading error."""
    return K_psi * wrap_angle(yaw_ref - yaw)
