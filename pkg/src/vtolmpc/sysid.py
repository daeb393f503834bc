"""Batch identification from uniformly sampled input/output logs.

Three steps are provided: delay removal by cross-correlation, per-axis
Virtual RC scaling estimation, and output-error fitting of first- and
second-order transfer functions

    k / (tau s + 1)            and        k w^2 / (s^2 + 2 zeta w s + w^2)

by Gauss-Newton on the simulation error of their zero-order-hold
discretizations.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.signal import lfilter, ss2tf

from .discretize import zoh
from .errors import DegenerateSignal, InvalidInit, NonConvergence

AXES = ("roll", "pitch", "yawrate", "vz")


@dataclass
class TimeSeriesLog:
    dt: float
    input: np.ndarray
    output: np.ndarray

    def __post_init__(self):
        self.input = np.asarray(self.input, dtype=float).ravel()
        self.output = np.asarray(self.output, dtype=float).ravel()
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.input.shape != self.output.shape:
            raise ValueError(
                f"input and output lengths differ: {self.input.size} vs {self.output.size}"
            )
        if self.input.size < 2:
            raise ValueError("a log needs at least 2 samples")
        if not (np.all(np.isfinite(self.input)) and np.all(np.isfinite(self.output))):
            raise ValueError("log contains NaN or Inf")

    def __len__(self):
        return self.input.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt


@dataclass(frozen=True)
class ScalingParams:
    """Virtual RC count to physical unit gains (experiment column by default)."""

    lambda_roll: float = 8.65e-4
    lambda_pitch: float = 8.44e-4
    lambda_yawrate: float = 2.24e-3
    lambda_vz: float = 2.65e-3

    def __post_init__(self):
        for name in ("lambda_roll", "lambda_pitch", "lambda_yawrate", "lambda_vz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda_roll, self.lambda_pitch, self.lambda_yawrate, self.lambda_vz])


@dataclass(frozen=True)
class FirstOrderModel:
    k: float
    tau: float

    def __post_init__(self):
        if not (self.k > 0 and self.tau > 0):
            raise InvalidInit(f"first-order model needs k > 0 and tau > 0, got {self}")

    @property
    def params(self) -> np.ndarray:
        return np.array([self.k, self.tau])

    @classmethod
    def from_tf(cls, num: float, pole: float) -> "FirstOrderModel":
        """Build from ``num / (s + pole)``."""
        return cls(k=num / pole, tau=1.0 / pole)

    def state_space(self):
        A = np.array([[-1.0 / self.tau]])
        B = np.array([[self.k / self.tau]])
        return A, B


@dataclass(frozen=True)
class SecondOrderModel:
    k: float
    zeta: float
    omega: float

    def __post_init__(self):
        if not (self.k > 0 and self.zeta > 0 and self.omega > 0):
            raise InvalidInit(f"second-order model needs k, zeta, omega > 0, got {self}")

    @property
    def params(self) -> np.ndarray:
        return np.array([self.k, self.zeta, self.omega])

    @classmethod
    def from_tf(cls, num: float, a1: float, a0: float) -> "SecondOrderModel":
        """Build from ``num / (s^2 + a1 s + a0)``."""
        omega = math.sqrt(a0)
        return cls(k=num / a0, zeta=a1 / (2.0 * omega), omega=omega)

    def state_space(self):
        """States are (output, output rate)."""
        w2 = self.omega**2
        A = np.array([[0.0, 1.0], [-w2, -2.0 * self.zeta * self.omega]])
        B = np.array([[0.0], [self.k * w2]])
        return A, B


Model = Union[FirstOrderModel, SecondOrderModel]

# Identified M100 dynamics (continuous time).
PAPER_FIRST_ORDER = {
    "roll": FirstOrderModel(k=1.673, tau=0.472),
    "pitch": FirstOrderModel(k=1.575, tau=0.472),
    "yawrate": FirstOrderModel(k=1.057, tau=0.161),
    "vz": FirstOrderModel(k=1.118, tau=0.334),
}
PAPER_SECOND_ORDER = {
    "roll": SecondOrderModel(k=0.975, zeta=0.512, omega=5.200),
    "pitch": SecondOrderModel(k=1.052, zeta=0.573, omega=5.239),
    "yawrate": SecondOrderModel(k=1.079, zeta=1.898, omega=23.448),
    "vz": SecondOrderModel(k=1.024, zeta=0.718, omega=4.985),
}


@dataclass
class FitReport:
    model: Model
    fit_percent: float
    residual_rms: float
    iterations: int = 0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def model_type(self) -> str:
        return "first_order" if isinstance(self.model, FirstOrderModel) else "second_order"

    def to_dict(self) -> dict:
        if isinstance(self.model, FirstOrderModel):
            params = {"k": self.model.k, "tau": self.model.tau}
        else:
            params = {"k": self.model.k, "zeta": self.model.zeta, "omega": self.model.omega}
        return {
            "model_type": self.model_type,
            "parameters": params,
            "fit_percent": self.fit_percent,
            "residual_rms": self.residual_rms,
            "iterations": self.iterations,
            "converged": self.converged,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# alignment and scaling


def align_signals(log: TimeSeriesLog, max_lag: int) -> tuple[TimeSeriesLog, int]:
    """Remove the delay between input and output.

    The lag maximizes the normalized (Pearson) cross-correlation between
    ``input[k]`` and ``output[k + lag]`` over the overlapping samples. A
    positive lag means the output trails the input. Ties go to the smallest
    ``|lag|``.

    Returns
    -------
    aligned : TimeSeriesLog
        Overlapping region with the output advanced by ``lag`` samples.
    lag : int
    """
    u, y = log.input, log.output
    T = len(log)
    max_lag = int(max_lag)
    if max_lag < 0 or max_lag >= T / 2:
        raise ValueError(f"max_lag must be in [0, T/2), got {max_lag} for T={T}")
    if np.ptp(u) == 0.0 or np.ptp(y) == 0.0:
        raise DegenerateSignal("cross-correlation needs non-constant input and output")

    # visit lags by increasing |lag| so strict '>' breaks ties toward zero
    order = sorted(range(-max_lag, max_lag + 1), key=lambda l: (abs(l), l))
    best_lag, best_r = 0, -np.inf
    for lag in order:
        a, b = _overlap(u, y, lag)
        a = a - a.mean()
        b = b - b.mean()
        den = math.sqrt(float(a @ a) * float(b @ b))
        r = float(a @ b) / den if den > 0 else -np.inf
        if r > best_r + 1e-12:
            best_lag, best_r = lag, r
    a, b = _overlap(u, y, best_lag)
    return TimeSeriesLog(log.dt, a.copy(), b.copy()), best_lag


def _overlap(u, y, lag):
    T = u.size
    if lag >= 0:
        return u[: T - lag], y[lag:]
    return u[-lag:], y[: T + lag]


def estimate_scaling(logs: Union[Mapping[str, TimeSeriesLog], Sequence[TimeSeriesLog]]) -> ScalingParams:
    """Least-squares count-to-unit gain for each axis.

    The objective ``sum ||z_k - lambda * u_k||^2`` separates per axis, so each
    gain is ``sum(z u) / sum(u^2)``. Logs must be aligned and trim-centered,
    ordered (or keyed) roll, pitch, yawrate, vz.
    """
    if isinstance(logs, Mapping):
        seq = [logs[a] for a in AXES]
    else:
        seq = list(logs)
    if len(seq) != 4:
        raise ValueError(f"expected 4 logs (roll, pitch, yawrate, vz), got {len(seq)}")
    lam = []
    for axis, lg in zip(AXES, seq):
        uu = float(lg.input @ lg.input)
        if uu == 0.0:
            raise DegenerateSignal(f"{axis}: input has no energy")
        lam.append(float(lg.input @ lg.output) / uu)
    return ScalingParams(*lam)


# --------------------------------------------------------------------------
# simulation


def discrete_filter(model: Model, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Difference-equation coefficients ``(b, a)`` of the ZOH-discretized model."""
    if isinstance(model, FirstOrderModel):
        p = math.exp(-dt / model.tau)
        return np.array([0.0, model.k * (1.0 - p)]), np.array([1.0, -p])
    A, B = model.state_space()
    Ad, Bd = zoh(A, B, dt)
    b, a = ss2tf(Ad, Bd, np.array([[1.0, 0.0]]), np.zeros((1, 1)))
    return np.asarray(b).ravel(), np.asarray(a).ravel()


def simulate_tf(model: Model, input, dt: float) -> np.ndarray:
    """Response of ``model`` to a sampled, held input, starting from rest."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    b, a = discrete_filter(model, dt)
    return lfilter(b, a, np.asarray(input, dtype=float))


# --------------------------------------------------------------------------
# output-error fitting


def fit_percent(y_meas: np.ndarray, y_sim: np.ndarray) -> float:
    den = np.linalg.norm(y_meas - y_meas.mean())
    if den == 0.0:
        return float("nan")
    return float(100.0 * (1.0 - np.linalg.norm(y_meas - y_sim) / den))


def default_first_order(log: TimeSeriesLog) -> FirstOrderModel:
    return FirstOrderModel(k=_std_ratio(log), tau=0.5)


def default_second_order(log: TimeSeriesLog) -> SecondOrderModel:
    return SecondOrderModel(k=_std_ratio(log), zeta=0.7, omega=5.0)


def _std_ratio(log):
    su, sy = np.std(log.input), np.std(log.output)
    if su == 0.0 or sy == 0.0:
        return 1.0
    return float(sy / su)


def fit_first_order(log: TimeSeriesLog, init=None, **kw) -> FitReport:
    """Output-error fit of ``k / (tau s + 1)``; see :func:`_gauss_newton`.

    ``init`` is a :class:`FirstOrderModel` or a ``(k, tau)`` pair.
    """
    init = init if init is not None else default_first_order(log)
    p0 = _check_init(init, 2)
    return _gauss_newton(lambda p: FirstOrderModel(*map(float, p)), p0, log, **kw)


def fit_second_order(log: TimeSeriesLog, init=None, **kw) -> FitReport:
    """Output-error fit of ``k w^2 / (s^2 + 2 zeta w s + w^2)``.

    ``init`` is a :class:`SecondOrderModel` or a ``(k, zeta, omega)`` triple.
    """
    init = init if init is not None else default_second_order(log)
    p0 = _check_init(init, 3)
    return _gauss_newton(lambda p: SecondOrderModel(*map(float, p)), p0, log, **kw)


def _check_init(init, n) -> np.ndarray:
    p = np.asarray(init.params if hasattr(init, "params") else init, dtype=float)
    if p.shape != (n,):
        raise InvalidInit(f"expected {n} initial parameters, got {p.shape}")
    if not np.all(np.isfinite(p) & (p > 0)):
        raise InvalidInit(f"initial parameters must be positive and finite: {p.tolist()}")
    return p


def _gauss_newton(make, p0, log, max_iter=200, step_tol=1e-8, grad_tol=1e-6, fd_step=1e-6):
    """Gauss-Newton over log-parameters with backtracking.

    Working in ``log(p)`` keeps every parameter positive and makes the step
    tolerance a relative one. The Jacobian is by central differences.
    """
    u, y = log.input, log.output
    dt = log.dt
    if not np.any(u):
        raise NonConvergence("input is identically zero: the data carry no information")
    theta = np.log(np.asarray(p0, dtype=float))

    def residual(th):
        return y - simulate_tf(make(np.exp(th)), u, dt)

    r = residual(theta)
    cost = float(r @ r)
    if cost == 0.0:
        return _report(make, theta, log, 0, True)

    n = theta.size
    it = 0
    converged = False
    grad_norm = np.inf
    for it in range(1, max_iter + 1):
        J = np.empty((y.size, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = fd_step
            # residual = y - sim, so d(sim)/d(theta) = -d(residual)
            J[:, j] = (residual(theta - e) - residual(theta + e)) / (2 * fd_step)
        g = J.T @ r
        grad_norm = float(np.linalg.norm(g)) / max(1.0, cost) ** 0.5
        JTJ = J.T @ J
        scale = np.sqrt(np.diag(JTJ))
        if not np.all(scale > 0):
            raise NonConvergence("output is insensitive to the model parameters (no information in the data)")
        Js = JTJ / np.outer(scale, scale)
        try:
            step = np.linalg.solve(Js, g / scale) / scale
        except np.linalg.LinAlgError as exc:
            raise NonConvergence("singular Gauss-Newton system") from exc

        alpha = 1.0
        while True:
            cand = theta + alpha * step
            rc = residual(cand)
            cc = float(rc @ rc)
            if cc <= cost or alpha < 1e-10:
                break
            alpha *= 0.5
        if cc > cost:
            # no descent left along the Gauss-Newton direction
            converged = grad_norm < grad_tol
            break
        theta, r, cost = cand, rc, cc
        if np.max(np.abs(alpha * step)) < step_tol:
            converged = True
            break
    else:
        if grad_norm > grad_tol:
            raise NonConvergence(
                f"no convergence after {max_iter} iterations (scaled gradient {grad_norm:.3g})"
            )
        converged = True
    if not converged and grad_norm > grad_tol:
        raise NonConvergence(f"line search stalled with scaled gradient {grad_norm:.3g}")
    return _report(make, theta, log, it, True)


def _report(make, theta, log, iterations, converged):
    model = make(np.exp(theta))
    y_sim = simulate_tf(model, log.input, log.dt)
    res = log.output - y_sim
    return FitReport(
        model=model,
        fit_percent=fit_percent(log.output, y_sim),
        residual_rms=float(np.sqrt(np.mean(res**2))),
        iterations=iterations,
        converged=converged,
    )


# --------------------------------------------------------------------------
# CSV input


def read_log_csv(path, tol: float = 1e-6) -> TimeSeriesLog:
    """Read a ``t,input,output`` CSV with one header line."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise ValueError(f"{path}: need a header and at least 2 rows")
    header = [h.strip() for h in rows[0]]
    idx = {name: header.index(name) for name in ("t", "input", "output") if name in header}
    if len(idx) != 3:
        raise ValueError(f"{path}: header must contain t,input,output; got {header}")
    data = np.array([[float(r[idx["t"]]), float(r[idx["input"]]), float(r[idx["output"]])] for r in rows[1:] if r])
    t = data[:, 0]
    d = np.diff(t)
    if np.any(d <= 0):
        raise ValueError(f"{path}: time stamps must be strictly increasing")
    dt = float(np.mean(d))
    if np.max(np.abs(d - dt)) > tol:
        raise ValueError(f"{path}: sampling is not uniform within {tol} s")
    return TimeSeriesLog(dt, data[:, 1], data[:, 2])


def write_log_csv(path, log: TimeSeriesLog) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "input", "output"])
        for t, a, b in zip(log.t, log.input, log.output):
            w.writerow([f"{t:.6f}", repr(float(a)), repr(float(b))])
