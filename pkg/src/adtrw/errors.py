"""Exception types shared across the package."""


class AdtrwError(Exception):
    """Base class for all package errors."""


class ParameterError(AdtrwError, ValueError):
    """An input violates a documented precondition."""


class EnvelopeError(AdtrwError, ArithmeticError):
    """A request falls outside the numerically trusted envelope of a method."""
