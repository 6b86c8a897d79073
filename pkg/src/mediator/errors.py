"""Exception hierarchy shared by every module of the package."""


class MediatorError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDimensionError(MediatorError, ValueError):
    pass


class InvalidArgumentError(MediatorError, ValueError):
    pass


class ContractViolationError(MediatorError, ValueError):
    """An input violated a documented numerical precondition (e.g. Hermiticity)."""


class PositivityError(MediatorError, ArithmeticError):
    """An eigenvalue fell below the clipping tolerance."""


class NumericalDomainError(MediatorError, ArithmeticError):
    pass


class UnsupportedMediatorError(MediatorError, ValueError):
    pass


class TruncationError(MediatorError, ArithmeticError):
    """The Fock truncation failed the dimension-doubling convergence check."""


class IntegratorError(MediatorError, ArithmeticError):
    """The master-equation integrator produced a non-physical state."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(MediatorError, ValueError):
    """Malformed scenario configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
