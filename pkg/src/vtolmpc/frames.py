"""Frame conventions and attitude conversions.

World frame W is ENU (z up), body frame B is forward-left-up, following the
ROS convention. Euler angles are intrinsic Z-Y-X: the body orientation is
``Rz(yaw) @ Ry(pitch) @ Rx(roll)`` (body to world).

With this convention a positive pitch tips the nose down and accelerates the
vehicle along +x_B; a positive roll lifts the left side and accelerates it
along -y_B. The world-frame tilt pair used by the position controller is
defined so that ``ax = g * theta_W`` and ``ay = -g * phi_W``, which makes the
heading removal a plain counter-clockwise rotation of ``(phi, theta)`` by yaw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GimbalLock

GIMBAL_TOL = 1e-6


def wrap_angle(a: float) -> float:
    """Wrap an angle into ``[-pi, pi)``."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w < 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True)
class Attitude:
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def normalized(self) -> "Attitude":
        return Attitude(self.roll, self.pitch, wrap_angle(self.yaw))

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])


@dataclass(frozen=True)
class Quaternion:
    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def to_matrix(self) -> np.ndarray:
        """Rotation matrix mapping body vectors into the world frame."""
        w, x, y, z = self.normalized().as_array()
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: Quaternion


def euler_to_quat(a: Attitude) -> Quaternion:
    cr, sr = math.cos(a.roll / 2), math.sin(a.roll / 2)
    cp, sp = math.cos(a.pitch / 2), math.sin(a.pitch / 2)
    cy, sy = math.cos(a.yaw / 2), math.sin(a.yaw / 2)
    q = Quaternion(
        w=cr * cp * cy + sr * sp * sy,
        x=sr * cp * cy - cr * sp * sy,
        y=cr * sp * cy + sr * cp * sy,
        z=cr * cp * sy - sr * sp * cy,
    )
    return q.normalized()


def quat_to_euler(q: Quaternion) -> Attitude:
    """Inverse of :func:`euler_to_quat` away from pitch = +-pi/2.

    Raises
    ------
    GimbalLock
        If the pitch lies within ``GIMBAL_TOL`` of +-pi/2.
    """
    w, x, y, z = q.normalized().as_array()
    s = 2.0 * (w * y - x * z)
    s = min(1.0, max(-1.0, s))
    pitch = math.asin(s)
    if abs(abs(pitch) - math.pi / 2) < GIMBAL_TOL:
        raise GimbalLock(f"pitch {pitch:.9f} rad is at the gimbal-lock singularity")
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return Attitude(roll, pitch, yaw)


def euler_to_matrix(a: Attitude) -> np.ndarray:
    return rot_z(a.yaw) @ rot_y(a.pitch) @ rot_x(a.roll)


def matrix_to_euler(R: np.ndarray) -> Attitude:
    s = min(1.0, max(-1.0, -R[2, 0]))
    pitch = math.asin(s)
    if abs(abs(pitch) - math.pi / 2) < GIMBAL_TOL:
        raise GimbalLock(f"pitch {pitch:.9f} rad is at the gimbal-lock singularity")
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return Attitude(roll, pitch, yaw)


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def ned_to_enu_attitude(a_ned: Attitude) -> Attitude:
    """Convert an autopilot (NED) attitude by pre-multiplying with ``Rx(pi)``."""
    R = rot_x(math.pi) @ euler_to_matrix(a_ned)
    return matrix_to_euler(R).normalized()


def ned_to_enu_vector(v) -> np.ndarray:
    """Apply ``Rx(pi)`` to an acceleration or angular-rate vector."""
    v = np.asarray(v, dtype=float)
    return np.array([v[0], -v[1], -v[2]])


def yaw_rotation(yaw: float) -> np.ndarray:
    """Counter-clockwise 2-D rotation by ``yaw``."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s], [s, c]])


def rotate_attitude_to_world(a: Attitude) -> tuple[float, float]:
    """Remove heading from the tilt: returns ``(phi_W, theta_W)``."""
    phi_w, theta_w = yaw_rotation(a.yaw) @ np.array([a.roll, a.pitch])
    return float(phi_w), float(theta_w)


def rotate_attitude_to_body(phi_w: float, theta_w: float, yaw: float) -> tuple[float, float]:
    phi, theta = yaw_rotation(-yaw) @ np.array([phi_w, theta_w])
    return float(phi), float(theta)


def thrust_tilt(roll: float, pitch: float, yaw: float, mode: str = "tan") -> np.ndarray:
    """Horizontal specific force per unit gravity for a thrust that holds altitude.

    ``mode="tan"`` is exact for a collective thrust whose vertical component
    balances gravity; ``mode="linear"`` is its small-angle form.
    """
    if mode == "linear":
        return yaw_rotation(yaw) @ np.array([pitch, -roll])
    if mode != "tan":
        raise ValueError(f"unknown tilt mode {mode!r}")
    # third column of Rz Ry Rx: the body z axis in world coordinates
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    zx = cy * sp * cr + sy * sr
    zy = sy * sp * cr - cy * sr
    zz = cp * cr
    return np.array([zx / zz, zy / zz])
