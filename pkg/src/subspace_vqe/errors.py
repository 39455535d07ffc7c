"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: validation problems exit with 2,
numerical failures with 3 and capability limits with 4.
"""


class SubspaceVQEError(Exception):
    """Base class for all library errors."""


class DomainError(SubspaceVQEError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(DomainError):
    """A configuration document failed validation."""


class NumericalError(SubspaceVQEError, ArithmeticError):
    """A computation produced an inconsistent or non-finite result.

    ``trace`` optionally carries the partial optimization trace so callers
    can persist it before aborting.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DegenerateSubspaceError(NumericalError):
    """The frame spans no usable direction (retained rank 0)."""


class InconsistentEstimateError(NumericalError):
    """An estimated overlap matrix is not positive semidefinite."""


class CapabilityError(SubspaceVQEError):
    """The request exceeds what the chosen method supports."""
