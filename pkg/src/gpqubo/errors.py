"""Exception hierarchy shared across the package."""


class GpquboError(Exception):
    """Base class for all package-specific errors."""


class MalformedInputError(GpquboError, ValueError):
    """An argument violates a documented precondition."""


class NumericalDegeneracyError(GpquboError, ArithmeticError):
    """A linear solve failed even after the jitter escalation ladder."""


class CapacityError(GpquboError, RuntimeError):
    """A solver was asked for a search space above its configured budget."""
