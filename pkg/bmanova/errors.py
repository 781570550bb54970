"""Exceptions raised across the package."""


class BmanovaError(Exception):
    """Base class for every error raised by bmanova."""


class ParameterError(BmanovaError, ValueError):
    """A precondition on the inputs does not hold."""


class DomainError(ParameterError):
    """An argument lies outside the domain of a special function."""


class NumericalError(BmanovaError, ArithmeticError):
    """A computation produced a value that cannot be trusted."""


class ConvergenceError(NumericalError):
    """A truncated series did not converge within its control limits."""
