"""Exception hierarchy shared across the package."""


class GaroError(Exception):
    """Base class for all errors raised by garo."""


class DomainError(GaroError, ValueError):
    """An input lies outside the domain of an operation."""


class DegeneracyError(DomainError):
    """A geometric construction collapsed to (numerically) zero."""

    def __init__(self, primitive, message=None):
        self.primitive = primitive
        super().__init__(message or f"degenerate {primitive}: constructing points are not in general position")


class ContractViolation(GaroError):
    """A multivector carries a coefficient outside its declared blade set."""


class ModelLoadError(GaroError):
    """A robot description could not be loaded."""


class NumericalError(GaroError, ArithmeticError):
    """A numerical procedure failed (singular system, non-PD Hessian, ...)."""


class ConfigError(GaroError):
    """An experiment configuration or CLI literal is invalid."""
