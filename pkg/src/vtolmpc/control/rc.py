"""Physical commands back to Virtual RC counts."""

from __future__ import annotations

import numpy as np

from ..frames import rotate_attitude_to_body
from ..plant import RC_MAX, RC_MIN, DeadZoneConfig, TrimConfig, VirtualRcCommand
from ..sysid import ScalingParams


def commands_to_virtual_rc(
    phi_cmd: float,
    theta_cmd: float,
    yawrate_cmd: float,
    vz_cmd: float,
    scaling: ScalingParams = ScalingParams(),
    trim: TrimConfig = TrimConfig(),
    deadzone: DeadZoneConfig = DeadZoneConfig(),
    yaw: float = 0.0,
    zero_tol: float = 1e-9,
) -> VirtualRcCommand:
    """Invert the autopilot's stick map, with dead-zone compensation.

    ``phi_cmd``/``theta_cmd`` are heading-free world-frame tilts and are
    rotated into the body frame by ``-yaw`` first. A non-zero command whose
    count offset would fall inside the dead zone is pushed out to the zone
    edge. Offsets below ``zero_tol`` counts (rotation roundoff) count as
    zero and stay at the trim neutral.
    """
    phi_b, theta_b = rotate_attitude_to_body(phi_cmd, theta_cmd, yaw)
    phys = np.array([phi_b, theta_b, yawrate_cmd, vz_cmd], dtype=float)
    offset = phys / scaling.as_array()
    hw = deadzone.as_array()
    offset[np.abs(offset) < zero_tol] = 0.0
    inside = (offset != 0.0) & (np.abs(offset) < hw)
    offset[inside] = np.sign(offset[inside]) * hw[inside]
    counts = np.clip(trim.as_array() + offset, RC_MIN, RC_MAX)
    return VirtualRcCommand(*(float(c) for c in counts))
