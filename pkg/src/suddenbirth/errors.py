"""Exception hierarchy shared by the whole package."""


class SuddenBirthError(Exception):
    """Base class for every error raised by :mod:`suddenbirth`."""


class ValidationError(SuddenBirthError, ValueError):
    """A state or parameter set violates its invariants."""


class DomainError(SuddenBirthError, ValueError):
    """An argument lies outside the domain of the operation (e.g. negative time)."""


class ConfigurationError(SuddenBirthError, ValueError):
    """Inconsistent or unsupported solver settings."""


class NumericalError(SuddenBirthError, ArithmeticError):
    """A numerical routine produced a non-finite or otherwise unusable result."""


class IntegrationError(NumericalError):
    """The master-equation integrator left the set of physical states."""
