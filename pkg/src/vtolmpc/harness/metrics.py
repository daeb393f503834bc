"""RMS tracking-error metrics."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..errors import EmptyWindow


@dataclass(frozen=True)
class RmsReport:
    pose_rms: float
    x_rms: float
    y_rms: float
    z_rms: float
    roll_rms: Optional[float]
    pitch_rms: Optional[float]
    yaw_rms: float

    def to_dict(self) -> dict:
        """Field dict; roll/pitch are dropped when they were not evaluated."""
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def compute_rms(t, actual, reference, window, include_attitude: bool = True) -> RmsReport:
    """RMS error between ``actual`` and ``reference`` over ``window``.

    Parameters
    ----------
    t : (T,) array
        Sample times.
    actual, reference : (T, 6) arrays
        Columns x, y, z (m), roll, pitch, yaw (rad).
    window : (t_start, t_end)
        Inclusive evaluation interval in seconds.
    include_attitude : bool
        When false, roll and pitch are reported as absent.

    The pose RMS is that of the 3-D Euclidean position error. Yaw error is
    wrapped before squaring. Angles are returned in degrees.
    """
    t = np.asarray(t, dtype=float)
    a = np.asarray(actual, dtype=float)
    r = np.asarray(reference, dtype=float)
    if a.shape != r.shape or a.shape[0] != t.size:
        raise ValueError(f"shape mismatch: t {t.shape}, actual {a.shape}, reference {r.shape}")
    t0, t1 = window
    eps = 1e-9
    m = (t >= t0 - eps) & (t <= t1 + eps)
    if not np.any(m):
        raise EmptyWindow(f"no samples in window [{t0}, {t1}]")
    e = a[m] - r[m]

    def rms(x):
        return float(math.sqrt(np.mean(np.square(x))))

    pose = float(math.sqrt(np.mean(np.sum(e[:, :3] ** 2, axis=1))))
    roll = pitch = None
    if include_attitude:
        roll = math.degrees(rms(e[:, 3]))
        pitch = math.degrees(rms(e[:, 4]))
    yaw = math.degrees(rms(_wrap(e[:, 5])))
    return RmsReport(pose, rms(e[:, 0]), rms(e[:, 1]), rms(e[:, 2]), roll, pitch, yaw)
