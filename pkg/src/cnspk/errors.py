"""Exception hierarchy shared across the workbench."""


class CnspkError(Exception):
    """Base class for all workbench errors."""


class DataError(CnspkError):
    """Input data rejected during parsing or validation.

    Carries the offending CSV coordinates when they are known. ``row`` is the
    1-based line number in the file (header = line 1); ``column`` is the
    column name.
    """

    def __init__(self, message, row=None, column=None):
        self.message = message
        self.row = row
        self.column = column
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)


class UnknownParameterError(CnspkError):
    """Lookup or assignment of a parameter name outside the fixed roster."""


class InvalidProfileError(CnspkError):
    """Plasma profile violates its invariants (too short, non-increasing...)."""


class NumericDomainError(CnspkError):
    """Non-finite state or parameter handed to a numeric kernel."""


class InvalidTrajectoryError(CnspkError):
    """Trajectory unusable for metric computation (fewer than 2 points)."""


class IntegrationFailureError(CnspkError):
    """Integrator exhausted its step budget before reaching the horizon."""

    def __init__(self, message, last_time):
        self.message = message
        self.last_time = last_time
        super().__init__(f"{message} (last good time t={last_time:g})")


class NumericBlowupError(CnspkError):
    """Integrator state became non-finite."""

    def __init__(self, message, last_time):
        self.message = message
        self.last_time = last_time
        super().__init__(f"{message} (last good time t={last_time:g})")


class BoundViolationError(CnspkError):
    """A swept parameter value left its physical bounds."""

    def __init__(self, message, multiplier=None):
        self.message = message
        self.multiplier = multiplier
        super().__init__(message)


class InvalidBoundsError(CnspkError):
    """Estimation bounds are structurally unusable (empty set, min >= max...)."""


class InfeasibleProblemError(CnspkError):
    """Every initial population member failed to evaluate."""


class CancelledError(CnspkError):
    """Cooperative cancellation was requested while a computation ran."""
