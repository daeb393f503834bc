"""Zero-order-hold discretization of continuous LTI systems."""

import numpy as np
from scipy.linalg import expm


def zoh(A, B, dt):
    """Discretize ``x' = A x + B u`` assuming ``u`` is held over each period.

    Uses the block matrix exponential ``expm([[A, B], [0, 0]] * dt)``.

    Returns
    -------
    Ad, Bd : ndarray
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    E = expm(M * dt)
    return E[:n, :n], E[:n, n:]
