"""Linear MPC for horizontal position.

State ``x = (x, y, vx, vy, phi_W, theta_W)``, input ``u = (u_phi_W, u_theta_W)``.
The closed attitude loop is modelled as first order per axis and the
disturbance ``d`` (a horizontal specific force) is held constant over the
horizon. States are eliminated (condensed QP in the 2N inputs) and the box
constrained problem is solved by a projected fast gradient method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_discrete_are

from ..discretize import zoh
from ..errors import InvalidModel, SolverStall
from ..sysid import FirstOrderModel

NX = 6
NU = 2


@dataclass(frozen=True)
class MpcWeights:
    q: tuple = (40.0, 40.0, 20.0, 20.0, 1.0, 1.0)
    r: tuple = (50.0, 50.0)
    r_delta: tuple = (50.0, 50.0)


@dataclass
class MpcProblem:
    A: np.ndarray
    B: np.ndarray
    Bd: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    R_delta: np.ndarray
    P: np.ndarray
    N: int = 20
    u_min: np.ndarray = field(default_factory=lambda: np.full(NU, -0.35))
    u_max: np.ndarray = field(default_factory=lambda: np.full(NU, 0.35))
    dt: float = 0.01
    g: float = 9.81
    k_phi: float = 1.0
    k_theta: float = 1.0

    def __post_init__(self):
        for name in ("Q", "R_delta", "P"):
            M = getattr(self, name)
            if not np.allclose(M, M.T) or np.linalg.eigvalsh(M).min() < -1e-9:
                raise InvalidModel(f"{name} must be symmetric positive semidefinite")
        if not np.allclose(self.R, self.R.T) or np.linalg.eigvalsh(self.R).min() <= 0:
            raise InvalidModel("R must be symmetric positive definite")
        self._condensed = None

    @property
    def condensed(self) -> "CondensedQp":
        if self._condensed is None:
            self._condensed = CondensedQp(self)
        return self._condensed


@dataclass
class MpcSolution:
    u0: np.ndarray
    U: np.ndarray
    predicted: np.ndarray
    cost: float
    iterations: int
    residual: float


def continuous_model(roll_model: FirstOrderModel, pitch_model: FirstOrderModel, g: float = 9.81):
    """Continuous ``(A, B, Bd)`` of the hover-linearized horizontal dynamics."""
    for m in (roll_model, pitch_model):
        if not (m.k > 0 and m.tau > 0):
            raise InvalidModel(f"attitude model must have k > 0 and tau > 0: {m}")
    A = np.zeros((NX, NX))
    A[0, 2] = A[1, 3] = 1.0
    A[2, 5] = g
    A[3, 4] = -g
    A[4, 4] = -1.0 / roll_model.tau
    A[5, 5] = -1.0 / pitch_model.tau
    B = np.zeros((NX, NU))
    B[4, 0] = roll_model.k / roll_model.tau
    B[5, 1] = pitch_model.k / pitch_model.tau
    Bd = np.zeros((NX, 2))
    Bd[2, 0] = Bd[3, 1] = 1.0
    return A, B, Bd


def build_mpc_problem(
    roll_model: FirstOrderModel,
    pitch_model: FirstOrderModel,
    weights: MpcWeights | None = None,
    dt: float = 0.01,
    N: int = 20,
    u_max: float = 0.35,
    g: float = 9.81,
) -> MpcProblem:
    """Discretize the horizontal model and assemble the MPC weights.

    ``A, B, Bd`` come from a zero-order hold at ``dt``. The disturbance acts
    on the velocities, so ``Bd`` is ``dt`` there, ``dt**2 / 2`` on the
    positions and zero on the attitude rows; with this exact ``Bd`` the
    reference from :func:`reference_window` is a true equilibrium of the
    discrete model. The terminal weight solves the discrete Riccati equation
    for ``(A, B, Q, R)``.
    """
    weights = weights or MpcWeights()
    Ac, Bc, Bdc = continuous_model(roll_model, pitch_model, g)
    A, B = zoh(Ac, Bc, dt)
    _, Bd = zoh(Ac, Bdc, dt)
    Q = np.diag(np.asarray(weights.q, dtype=float))
    R = np.diag(np.asarray(weights.r, dtype=float))
    Rd = np.diag(np.asarray(weights.r_delta, dtype=float))
    P = solve_discrete_are(A, B, Q, R)
    P = 0.5 * (P + P.T)
    return MpcProblem(
        A=A, B=B, Bd=Bd, Q=Q, R=R, R_delta=Rd, P=P, N=int(N),
        u_min=np.full(NU, -u_max), u_max=np.full(NU, u_max),
        dt=dt, g=g, k_phi=roll_model.k, k_theta=pitch_model.k,
    )


class CondensedQp:
    """``min 0.5 U'HU + f'U`` with ``f`` affine in (x0, d, refs, u_prev)."""

    def __init__(self, p: MpcProblem):
        N, A, B, Bd = p.N, p.A, p.B, p.Bd
        # X = [x_1; ...; x_N] = Phi x0 + Gam U + Gd d
        Phi = np.zeros((N * NX, NX))
        Gam = np.zeros((N * NX, N * NU))
        Gd = np.zeros((N * NX, Bd.shape[1]))
        Ak = np.eye(NX)
        acc_d = np.zeros((NX, Bd.shape[1]))
        for k in range(N):
            acc_d = A @ acc_d + Bd
            Ak = A @ Ak
            Phi[k * NX:(k + 1) * NX] = Ak
            Gd[k * NX:(k + 1) * NX] = acc_d
            for j in range(k + 1):
                Gam[k * NX:(k + 1) * NX, j * NU:(j + 1) * NU] = np.linalg.matrix_power(A, k - j) @ B
        Qbar = np.kron(np.eye(N), p.Q)
        Qbar[-NX:, -NX:] = p.P
        Rbar = np.kron(np.eye(N), p.R)
        D = np.eye(N * NU) - np.eye(N * NU, k=-NU)
        Rdbar = np.kron(np.eye(N), p.R_delta)

        self.Phi, self.Gam, self.Gd = Phi, Gam, Gd
        self.Qbar, self.Rbar, self.D, self.Rdbar = Qbar, Rbar, D, Rdbar
        H = 2.0 * (Gam.T @ Qbar @ Gam + Rbar + D.T @ Rdbar @ D)
        self.H = 0.5 * (H + H.T)
        eig = np.linalg.eigvalsh(self.H)
        self.L = float(eig[-1])
        self.mu = float(eig[0])
        self.GQ = 2.0 * Gam.T @ Qbar
        sl, sm = math.sqrt(self.L), math.sqrt(max(self.mu, 0.0))
        self.beta = (sl - sm) / (sl + sm)
        self.lo = np.tile(p.u_min, N)
        self.hi = np.tile(p.u_max, N)
        self.problem = p

    def linear_term(self, x0, d, X_ref, U_ref, u_prev):
        """Gradient at U = 0 and the U-independent part of the cost."""
        N = self.problem.N
        free = self.Phi @ x0 + self.Gd @ d - X_ref[1:].ravel()
        c = np.zeros(N * NU)
        c[:NU] = u_prev
        Ur = U_ref.ravel()
        f = self.GQ @ free - 2.0 * self.Rbar @ Ur - 2.0 * self.D.T @ self.Rdbar @ c
        e0 = x0 - X_ref[0]
        const = (
            e0 @ self.problem.Q @ e0
            + free @ self.Qbar @ free
            + Ur @ self.Rbar @ Ur
            + c @ self.Rdbar @ c
        )
        return f, float(const)

    def project(self, U):
        return np.minimum(np.maximum(U, self.lo), self.hi)

    def solve(self, f, U0=None, tol=1e-6, max_iter=500):
        """Projected fast gradient with gradient-based adaptive restart.

        Returns ``(U, iterations, gradient_map_norm)``.
        """
        H, L, beta = self.H, self.L, self.beta
        U = self.project(np.zeros_like(f) if U0 is None else np.asarray(U0, dtype=float))
        Y = U.copy()
        res = np.inf
        for it in range(1, max_iter + 1):
            grad = H @ Y + f
            U_new = self.project(Y - grad / L)
            res = L * float(np.linalg.norm(Y - U_new))
            if res < tol:
                return U_new, it, res
            step = U_new - U
            if (Y - U_new) @ step > 0.0:
                # momentum points uphill: restart from the projected point
                Y = U_new.copy()
            else:
                Y = U_new + beta * step
            U = U_new
        return U, max_iter, res


def _as_refs(x_ref, u_ref, N):
    X = np.asarray(x_ref, dtype=float)
    if X.ndim == 1:
        X = np.tile(X, (N + 1, 1))
    Ur = np.asarray(u_ref, dtype=float)
    if Ur.ndim == 1:
        Ur = np.tile(Ur, (N, 1))
    if X.shape != (N + 1, NX) or Ur.shape != (N, NU):
        raise ValueError(f"references must be ({N + 1},{NX}) and ({N},{NU}); got {X.shape}, {Ur.shape}")
    return X, Ur


def solve_mpc(
    problem: MpcProblem,
    x0,
    d0,
    x_ref,
    u_ref,
    u_prev,
    warm_start=None,
    tol: float = 1e-6,
    max_iter: int = 500,
    stall_tol: float = 1e-3,
) -> MpcSolution:
    """Solve one receding-horizon problem and return the first input.

    Raises
    ------
    SolverStall
        If ``max_iter`` is reached with a gradient-map (KKT) residual above
        ``stall_tol``. Callers are expected to hold their previous input.
    """
    qp = problem.condensed
    N = problem.N
    x0 = np.asarray(x0, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    X_ref, U_ref = _as_refs(x_ref, u_ref, N)
    f, const = qp.linear_term(x0, d0, X_ref, U_ref, np.asarray(u_prev, dtype=float))
    U, iters, res = qp.solve(f, warm_start, tol=tol, max_iter=max_iter)
    if iters >= max_iter and res > stall_tol:
        raise SolverStall(f"QP stalled after {iters} iterations (residual {res:.3g})", residual=res)
    cost = float(0.5 * U @ qp.H @ U + f @ U + const)
    X = (qp.Phi @ x0 + qp.Gam @ U + qp.Gd @ d0).reshape(N, NX)
    predicted = np.vstack([x0, X])
    Um = U.reshape(N, NU)
    return MpcSolution(u0=Um[0].copy(), U=Um, predicted=predicted, cost=cost, iterations=iters, residual=res)


def reference_window(problem: MpcProblem, positions, velocities, accelerations, d):
    """State and input references for an (N+1)-sample horizon.

    The tilt reference is the one that produces the reference acceleration
    given the current disturbance estimate, and the input reference is the
    matching steady-state attitude command. Feeding ``d`` here is what makes
    the tracking offset-free.
    """
    pos = np.asarray(positions, dtype=float)[:, :2]
    vel = np.asarray(velocities, dtype=float)[:, :2]
    acc = np.asarray(accelerations, dtype=float)[:, :2]
    d = np.asarray(d, dtype=float)
    theta_w = (acc[:, 0] - d[0]) / problem.g
    phi_w = -(acc[:, 1] - d[1]) / problem.g
    X = np.column_stack([pos, vel, phi_w, theta_w])
    U = np.column_stack([phi_w / problem.k_phi, theta_w / problem.k_theta])[:-1]
    return X, U
