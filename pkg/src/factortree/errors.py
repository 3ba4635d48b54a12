"""Exception hierarchy shared across the package."""


class FactorTreeError(Exception):
    """Base class for all package errors."""


class DomainError(FactorTreeError, ValueError):
    """A parameter or argument lies outside its admissible domain."""


class InvalidInputError(FactorTreeError, ValueError):
    """Input contains NaN or is otherwise malformed."""


class BoundaryError(DomainError):
    """A conditioning value sits on the boundary of the unit interval."""


class DataError(FactorTreeError, ValueError):
    """Response data violates the ordinal-data contract."""


class NumericError(FactorTreeError, ArithmeticError):
    """An iterative routine failed to converge or produced non-finite output."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class InitializationError(NumericError):
    """The log-likelihood is not finite at the starting point."""
