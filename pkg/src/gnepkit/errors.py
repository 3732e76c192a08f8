"""Exception hierarchy shared by all gnepkit modules."""


class GnepError(Exception):
    """Base class for all library errors."""


class DimensionError(GnepError, ValueError):
    """A vector or block does not match the game's dimensions."""

    def __init__(self, message, player=None, block=None):
        super().__init__(message)
        self.player = player
        self.block = block


class GradientUnavailable(GnepError):
    """An objective without a gradient oracle was asked for a gradient."""


class DomainError(GnepError):
    """Some player's feasible section is empty (the bundle is outside the domain)."""

    def __init__(self, message, player=None):
        super().__init__(message)
        self.player = player


class PreconditionError(GnepError, ValueError):
    """An operation was called with inputs violating its preconditions."""


class NotPSDError(GnepError):
    """Negative curvature met while minimizing a supposedly convex quadratic."""


class ConvergenceError(GnepError):
    """An inner iterative routine exhausted its iteration budget."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
