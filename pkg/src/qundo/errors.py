"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the range where an operation is defined."""


class InvalidStateError(ValueError):
    """A matrix fails the density-matrix checks (Hermitian, unit trace, PSD)."""


class NumericalError(RuntimeError):
    """Propagation or optimization produced a non-finite value."""

    def __init__(self, message, step=None, point=None):
        super().__init__(message)
        self.step = step
        self.point = point


class PreconditionError(ValueError):
    """Inputs are individually valid but violate an operation's precondition."""
