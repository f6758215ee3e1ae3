"""Exception types shared across the planner."""


class DomainError(ValueError):
    """Argument outside the domain of a model function."""


class InfeasibleError(RuntimeError):
    """A physical or radio constraint cannot be met."""


class InfeasibleLinkError(InfeasibleError):
    """Altitude window for a D2V link is empty (lower bound above upper bound)."""

    def __init__(self, h_low: float, h_high: float, message: str | None = None):
        self.h_low = h_low
        self.h_high = h_high
        super().__init__(message or f"empty altitude window: h_low={h_low:.6g} m > h_high={h_high:.6g} m")


class InfeasibleSegmentError(InfeasibleError):
    """Lift cannot hold the resultant force on the segment direction."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")


class TrackingError(RuntimeError):
    """Closed-loop tracking did not reach the target before the timeout."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: BaseException, inputs: dict | None = None):
        self.stage = stage
        self.cause = cause
        self.inputs = inputs or {}
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
