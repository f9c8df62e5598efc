"""Exception types shared across the package.

Exit-code mapping used by the CLI: ValidationError -> 2, NumericalError -> 3,
AcceptanceFailure -> 4.
"""


class ValidationError(ValueError):
    """Invalid input data: bad graph spec, non-unitary matrix, misaligned grid."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or lost a tracked object."""


class AcceptanceFailure(AssertionError):
    """An acceptance-mode assertion did not hold."""
