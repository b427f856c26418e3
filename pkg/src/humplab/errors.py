"""Exception types shared across humplab."""


class ArgumentError(ValueError):
    """Invalid arguments or inconsistent inputs."""


class HuntFailure(RuntimeError):
    """A seed did not yield a usable double-humped pair."""


class NumericError(ArithmeticError):
    """A numerical routine failed (non-convergence, non-finite values)."""


class StepSizeError(NumericError):
    """An explicit integrator drifted off its invariant manifold."""


class PeriodNotFound(NumericError):
    """No return to the initial state was seen in the integrated window."""
