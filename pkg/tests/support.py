"""Shared helpers for the test suite: excitation signals and a QP oracle."""

from __future__ import annotations

import numpy as np

from vtolmpc.sysid import TimeSeriesLog, simulate_tf


def prbs(n: int, hold: int, rng: np.random.Generator, amplitude: float = 1.0) -> np.ndarray:
    """Random binary sequence held for ``hold`` samples per level."""
    levels = rng.choice([-amplitude, amplitude], size=n // hold + 1)
    return np.repeat(levels, hold)[:n]


def synthetic_log(model, seed: int, duration: float = 60.0, dt: float = 0.01, hold: int = 25, noise: float = 0.01):
    """Simulated log from ``model`` with output noise ``noise`` times the output std."""
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt))
    u = prbs(n, hold, rng, amplitude=0.2)
    y = simulate_tf(model, u, dt)
    if noise > 0:
        y = y + noise * np.std(y) * rng.standard_normal(n)
    return TimeSeriesLog(dt, u, y)


# --------------------------------------------------------------------------
# QP oracle: uncondensed (X, U) formulation, exact primal active-set method


def sparse_qp(problem, x0, d, X_ref, U_ref, u_prev):
    """Cost ``0.5 z'Hz + f'z + c`` and equalities ``E z = e`` over z = (x_1..x_N, u_0..u_{N-1})."""
    N, A, B, Bd = problem.N, problem.A, problem.B, problem.Bd
    nx, nu = A.shape[0], B.shape[1]
    nX, nU = N * nx, N * nu
    nz = nX + nU
    H = np.zeros((nz, nz))
    f = np.zeros(nz)
    c = float((x0 - X_ref[0]) @ problem.Q @ (x0 - X_ref[0]))

    def xs(k):  # x_k, k = 1..N
        return slice((k - 1) * nx, k * nx)

    def us(k):
        return slice(nX + k * nu, nX + (k + 1) * nu)

    for k in range(1, N + 1):
        W = problem.P if k == N else problem.Q
        H[xs(k), xs(k)] += 2 * W
        f[xs(k)] += -2 * W @ X_ref[k]
        c += X_ref[k] @ W @ X_ref[k]
    for k in range(N):
        H[us(k), us(k)] += 2 * problem.R
        f[us(k)] += -2 * problem.R @ U_ref[k]
        c += U_ref[k] @ problem.R @ U_ref[k]
        Rd = problem.R_delta
        H[us(k), us(k)] += 2 * Rd
        if k == 0:
            f[us(0)] += -2 * Rd @ u_prev
            c += u_prev @ Rd @ u_prev
        else:
            H[us(k - 1), us(k - 1)] += 2 * Rd
            H[us(k), us(k - 1)] += -2 * Rd
            H[us(k - 1), us(k)] += -2 * Rd

    E = np.zeros((nX, nz))
    e = np.zeros(nX)
    for k in range(N):
        r = slice(k * nx, (k + 1) * nx)
        E[r, xs(k + 1)] = np.eye(nx)
        E[r, us(k)] = -B
        if k == 0:
            e[r] = A @ x0 + Bd @ d
        else:
            E[r, xs(k)] = -A
            e[r] = Bd @ d
    lo = np.concatenate([np.full(nX, -np.inf), np.tile(problem.u_min, N)])
    hi = np.concatenate([np.full(nX, np.inf), np.tile(problem.u_max, N)])
    return H, f, c, E, e, lo, hi


def active_set_qp(H, f, E, e, lo, hi, max_iter=500):
    """Primal active-set method for ``min 0.5 z'Hz + f'z, Ez = e, lo <= z <= hi``.

    Returns the minimizer, certified by the KKT conditions: stationarity from
    the final linear solve, primal feasibility, and non-negative bound
    multipliers. Raises if the certificate cannot be reached.
    """
    nz, ne = H.shape[0], E.shape[0]
    bounded = np.where(np.isfinite(lo))[0]
    # feasible start: inputs at the clipped origin, states from the dynamics
    z = np.zeros(nz)
    z[bounded] = np.clip(0.0, lo[bounded], hi[bounded])
    free = np.setdiff1d(np.arange(nz), bounded)
    z[free] = np.linalg.solve(E[:, free], e - E[:, bounded] @ z[bounded])
    work: dict[int, int] = {}  # index -> -1 (lower) / +1 (upper)

    for _ in range(max_iter):
        idx = sorted(work)
        C = np.zeros((len(idx), nz))
        for r, i in enumerate(idx):
            C[r, i] = 1.0
        K = np.block([
            [H, E.T, C.T],
            [E, np.zeros((ne, ne)), np.zeros((ne, len(idx)))],
            [C, np.zeros((len(idx), ne + len(idx)))],
        ])
        rhs = np.concatenate([-f, e, [lo[i] if work[i] < 0 else hi[i] for i in idx]])
        sol = np.linalg.solve(K, rhs)
        z_eq = sol[:nz]
        # H z + f + E'nu + C'mu = 0; lower-bound mu must be <= 0, upper >= 0
        mu = sol[nz + ne:]
        p = z_eq - z
        if np.linalg.norm(p) < 1e-12 * max(1.0, np.linalg.norm(z)):
            signed = np.array([-m if work[i] < 0 else m for m, i in zip(mu, idx)])
            if signed.size == 0 or signed.min() >= -1e-10:
                return z_eq
            del work[idx[int(np.argmin(signed))]]
            continue
        alpha, block = 1.0, None
        for i in bounded:
            if i in work:
                continue
            if p[i] < -1e-15:
                a = (lo[i] - z[i]) / p[i]
                if a < alpha:
                    alpha, block = a, (i, -1)
            elif p[i] > 1e-15:
                a = (hi[i] - z[i]) / p[i]
                if a < alpha:
                    alpha, block = a, (i, 1)
        z = z + max(alpha, 0.0) * p
        if block is not None:
            work[block[0]] = block[1]
            z[block[0]] = lo[block[0]] if block[1] < 0 else hi[block[0]]
    raise RuntimeError("active-set oracle did not terminate")


def oracle_solve(problem, x0, d, X_ref, U_ref, u_prev):
    """Optimal ``(cost, U)`` of one MPC instance from the uncondensed oracle."""
    H, f, c, E, e, lo, hi = sparse_qp(problem, x0, d, X_ref, U_ref, u_prev)
    z = active_set_qp(H, f, E, e, lo, hi)
    nX = problem.N * problem.A.shape[0]
    cost = 0.5 * z @ H @ z + f @ z + c
    return float(cost), z[nX:].reshape(problem.N, -1)


def random_instance(rng: np.random.Generator, N: int = 5, saturate: bool = True):
    """Random well-posed MPC instance.

    With ``saturate`` the box is tight enough that some inputs hit it;
    otherwise the box is wide and the optimum is interior.
    """
    from vtolmpc.control.mpc import MpcWeights, build_mpc_problem
    from vtolmpc.sysid import FirstOrderModel

    roll = FirstOrderModel(rng.uniform(0.5, 2.0), rng.uniform(0.1, 0.8))
    pitch = FirstOrderModel(rng.uniform(0.5, 2.0), rng.uniform(0.1, 0.8))
    weights = MpcWeights(
        q=tuple(rng.uniform(0.5, 50.0, 6)),
        r=tuple(rng.uniform(0.5, 50.0, 2)),
        r_delta=tuple(rng.uniform(0.0, 50.0, 2)),
    )
    dt = float(rng.choice([0.01, 0.05, 0.1]))
    problem = build_mpc_problem(roll, pitch, weights, dt=dt, N=N, u_max=float(rng.uniform(0.05, 0.35)) if saturate else 50.0)
    x0 = rng.normal(0.0, [2.0, 2.0, 1.0, 1.0, 0.2, 0.2])
    d = rng.normal(0.0, 0.5, 2)
    X_ref = rng.normal(0.0, 0.5, (N + 1, 6))
    U_ref = rng.normal(0.0, 0.1, (N, 2))
    u_prev = rng.uniform(-0.3, 0.3, 2)
    return problem, x0, d, X_ref, U_ref, u_prev
