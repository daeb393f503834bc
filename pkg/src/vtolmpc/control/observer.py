"""Augmented EKF estimating the horizontal state and a constant disturbance.

State ``(x, y, vx, vy, phi, phi_dot, theta, theta_dot, dx, dy)`` with the
tilt expressed in the heading-free world frame. Roll and pitch follow their
second-order closed-loop models, velocities are driven by the thrust tilt
(``ax = g tan(theta)``, ``ay = -g tan(phi) / cos(theta)``) plus ``d``, and
``d`` is a random walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..discretize import zoh
from ..errors import FilterDiverged
from ..frames import rotate_attitude_to_world
from ..sysid import PAPER_SECOND_ORDER, SecondOrderModel

NZ = 10
IX, IY, IVX, IVY, IPHI, IDPHI, ITH, IDTH, IDX, IDY = range(NZ)


@dataclass(frozen=True)
class MpcState:
    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    phi_W: float = 0.0
    theta_W: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy, self.phi_W, self.theta_W])


@dataclass(frozen=True)
class DisturbanceEstimate:
    d: np.ndarray
    covariance: np.ndarray


@dataclass(frozen=True)
class ObserverConfig:
    q_d: float = 0.05  # m/s^2 per sqrt(s)
    q_pos: float = 1e-3
    q_vel: float = 1e-2
    q_att: float = 1e-2
    r_pos: float = 0.01
    r_vel: float = 0.02
    r_att: float = 0.005
    measure_position: bool = True
    p0_d: float = 1.0
    diverge_trace: float = 1e6


class DisturbanceObserver:
    def __init__(
        self,
        roll_model: SecondOrderModel = PAPER_SECOND_ORDER["roll"],
        pitch_model: SecondOrderModel = PAPER_SECOND_ORDER["pitch"],
        dt: float = 0.01,
        g: float = 9.81,
        cfg: ObserverConfig | None = None,
        z0=None,
    ):
        self.cfg = cfg or ObserverConfig()
        self.dt = dt
        self.g = g
        self.Ar, self.Br = zoh(*roll_model.state_space(), dt)
        self.Ap, self.Bp = zoh(*pitch_model.state_space(), dt)
        c = self.cfg
        # continuous white-noise intensities integrated over one period
        self.Qn = np.diag(
            [c.q_pos**2, c.q_pos**2, c.q_vel**2, c.q_vel**2,
             c.q_att**2, c.q_att**2, c.q_att**2, c.q_att**2,
             c.q_d**2, c.q_d**2]
        ) * dt
        rows = [IPHI, ITH, IVX, IVY]
        sig = [c.r_att, c.r_att, c.r_vel, c.r_vel]
        if c.measure_position:
            rows += [IX, IY]
            sig += [c.r_pos, c.r_pos]
        self.Hm = np.zeros((len(rows), NZ))
        self.Hm[np.arange(len(rows)), rows] = 1.0
        self.Rm = np.diag(np.square(sig))
        self.z = np.zeros(NZ) if z0 is None else np.asarray(z0, dtype=float).copy()
        self.P = np.diag([c.r_pos**2] * 2 + [c.r_vel**2] * 2 + [c.r_att**2] * 4 + [c.p0_d] * 2)
        self.last_nis = float("nan")

    # model -----------------------------------------------------------------

    def _tilt(self, phi, theta):
        return math.tan(theta), -math.tan(phi) / math.cos(theta)

    def predict_mean(self, z, u) -> np.ndarray:
        """One-step discrete model; the translational part is semi-implicit Euler."""
        dt, g = self.dt, self.g
        zn = z.copy()
        zn[IPHI:IDPHI + 1] = self.Ar @ z[IPHI:IDPHI + 1] + self.Br[:, 0] * u[0]
        zn[ITH:IDTH + 1] = self.Ap @ z[ITH:IDTH + 1] + self.Bp[:, 0] * u[1]
        tx, ty = self._tilt(zn[IPHI], zn[ITH])
        zn[IVX] = z[IVX] + dt * (g * tx + z[IDX])
        zn[IVY] = z[IVY] + dt * (g * ty + z[IDY])
        zn[IX] = z[IX] + dt * zn[IVX]
        zn[IY] = z[IY] + dt * zn[IVY]
        return zn

    def jacobian(self, z, u) -> np.ndarray:
        dt, g = self.dt, self.g
        F = np.zeros((NZ, NZ))
        F[IPHI:IDPHI + 1, IPHI:IDPHI + 1] = self.Ar
        F[ITH:IDTH + 1, ITH:IDTH + 1] = self.Ap
        F[IDX, IDX] = F[IDY, IDY] = 1.0
        phi = self.Ar[0] @ z[IPHI:IDPHI + 1] + self.Br[0, 0] * u[0]
        th = self.Ap[0] @ z[ITH:IDTH + 1] + self.Bp[0, 0] * u[1]
        sec2t = 1.0 / math.cos(th) ** 2
        # partials of the tilt w.r.t. the *new* attitude, chained through Ar/Ap
        dtx_dth = sec2t
        dty_dphi = -(1.0 / math.cos(phi) ** 2) / math.cos(th)
        dty_dth = -math.tan(phi) * math.sin(th) / math.cos(th) ** 2
        F[IVX, IVX] = 1.0
        F[IVX, ITH:IDTH + 1] = dt * g * dtx_dth * self.Ap[0]
        F[IVX, IDX] = dt
        F[IVY, IVY] = 1.0
        F[IVY, IPHI:IDPHI + 1] = dt * g * dty_dphi * self.Ar[0]
        F[IVY, ITH:IDTH + 1] = dt * g * dty_dth * self.Ap[0]
        F[IVY, IDY] = dt
        F[IX, IX] = 1.0
        F[IX] += dt * F[IVX]
        F[IY, IY] = 1.0
        F[IY] += dt * F[IVY]
        return F

    # filter ----------------------------------------------------------------

    def measurement(self, sensor) -> np.ndarray:
        phi_w, theta_w = rotate_attitude_to_world(sensor.attitude)
        m = [phi_w, theta_w, sensor.velocity[0], sensor.velocity[1]]
        if self.cfg.measure_position:
            m += [sensor.position[0], sensor.position[1]]
        return np.array(m)

    def predict(self, u) -> None:
        u = np.asarray(u, dtype=float)
        F = self.jacobian(self.z, u)
        self.z = self.predict_mean(self.z, u)
        self.P = F @ self.P @ F.T + self.Qn
        self.P = 0.5 * (self.P + self.P.T)

    def update(self, meas) -> None:
        y = np.asarray(meas, dtype=float) - self.Hm @ self.z
        S = self.Hm @ self.P @ self.Hm.T + self.Rm
        K = np.linalg.solve(S, self.Hm @ self.P).T
        self.z = self.z + K @ y
        # Joseph form keeps P positive semidefinite
        IKH = np.eye(NZ) - K @ self.Hm
        self.P = IKH @ self.P @ IKH.T + K @ self.Rm @ K.T
        self.P = 0.5 * (self.P + self.P.T)
        self.last_nis = float(y @ np.linalg.solve(S, y))
        tr = float(np.trace(self.P))
        if not math.isfinite(tr) or tr > self.cfg.diverge_trace:
            raise FilterDiverged(f"covariance trace {tr:.3g} exceeds {self.cfg.diverge_trace:.3g}")

    def step(self, sensor, u_prev) -> tuple[MpcState, DisturbanceEstimate]:
        """Predict with the command applied over the last period, then update."""
        self.predict(u_prev)
        self.update(self.measurement(sensor))
        return self.mpc_state(), self.disturbance()

    def mpc_state(self) -> MpcState:
        z = self.z
        return MpcState(z[IX], z[IY], z[IVX], z[IVY], z[IPHI], z[ITH])

    def disturbance(self) -> DisturbanceEstimate:
        return DisturbanceEstimate(self.z[IDX:].copy(), self.P[IDX:, IDX:].copy())


def ekf_observer_step(observer: DisturbanceObserver, sensor, cmd) -> tuple[MpcState, DisturbanceEstimate]:
    """Functional alias for :meth:`DisturbanceObserver.step`."""
    return observer.step(sensor, cmd)
