"""Exception types raised across the package."""


class VtolMpcError(Exception):
    """Base class for all package errors."""


class GimbalLock(VtolMpcError, ValueError):
    pass


class DegenerateSignal(VtolMpcError, ValueError):
    pass


class InvalidInit(VtolMpcError, ValueError):
    pass


class InvalidModel(VtolMpcError, ValueError):
    pass


class NonConvergence(VtolMpcError, RuntimeError):
    pass


class SolverStall(VtolMpcError, RuntimeError):
    """Raised when the QP iteration cap is hit with a large KKT residual."""

    def __init__(self, message, residual=float("nan"), tick=None):
        super().__init__(message)
        self.residual = residual
        self.tick = tick


class FilterDiverged(VtolMpcError, RuntimeError):
    def __init__(self, message, tick=None):
        super().__init__(message)
        self.tick = tick


class EmptyWindow(VtolMpcError, ValueError):
    pass


class InvalidWaypoints(VtolMpcError, ValueError):
    pass
