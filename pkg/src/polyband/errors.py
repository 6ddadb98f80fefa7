"""Exception hierarchy shared across the package."""


class PolyBandError(Exception):
    """Base class for all package errors."""


class DomainError(PolyBandError, ValueError):
    """A numeric input lies outside the domain of an operation."""


class ArgumentError(PolyBandError, ValueError):
    """An argument has the wrong size, count or structure."""


class DegeneracyError(PolyBandError, ValueError):
    """Geometry collapsed: zero spread, zero area, or similar."""


class FormatError(PolyBandError, ValueError):
    """An annotation or file does not follow the expected layout."""


class GenerationError(PolyBandError, RuntimeError):
    """Synthetic scene generation ran out of attempts."""


class NumericalError(PolyBandError, ArithmeticError):
    """An optimisation produced a non-finite value."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
