"""Exception hierarchy shared by the numeric modules and the CLI."""


class KPPError(Exception):
    """Base class for all errors raised by kppspeed."""


class ConfigError(KPPError, ValueError):
    """Malformed user input: bad config keys, invalid constraint specs."""


class PreconditionError(KPPError, ValueError):
    """An operation was called outside its domain of validity."""


class GridTooCoarseError(PreconditionError):
    """The grid spacing breaks the M-matrix property of the shifted operator.

    ``required_n`` is the smallest even sample count that satisfies the bound.
    """

    def __init__(self, message, required_n):
        super().__init__(message)
        self.required_n = required_n


class AliasingError(PreconditionError):
    """Requested Fourier mode is at or above the Nyquist index N/2."""


class DegenerateError(KPPError, ArithmeticError):
    """A quantity that must be bounded away from zero is not."""


class ConvergenceError(KPPError, RuntimeError):
    """An iterative solver hit its iteration cap.

    ``residual`` carries the last residual observed.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class PositivityError(KPPError, RuntimeError):
    """A Perron vector came out with a non-positive entry."""


class FrontBoundaryError(KPPError, RuntimeError):
    """The simulated front came too close to the truncated domain edge."""


class StabilityError(KPPError, RuntimeError):
    """The simulated solution left the invariant interval [0, 1]."""
