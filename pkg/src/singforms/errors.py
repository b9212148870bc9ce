"""Exception types shared across the package.

Exit-code mapping used by the CLI: validation-type errors map to 2,
resolution errors to 3.
"""


class SingformsError(Exception):
    """Base class for package errors."""


class InvalidArgumentError(SingformsError, ValueError):
    """A scalar/flag argument is out of its admissible range."""


class SupportOverflowError(SingformsError):
    """An operation would push declared support outside the grid box."""


class ResolutionError(SingformsError):
    """The requested scale range cannot be resolved on the current grid."""


class CancellationError(SingformsError):
    """A required vanishing-integral condition fails numerically."""


class ParityError(SingformsError):
    """A parity precondition (odd/even symmetry) fails numerically."""


class UndefinedRatioError(SingformsError):
    """A normalizing denominator is zero (e.g. an all-zero kernel family)."""


class SingularSupportError(SingformsError):
    """Kernel support touches the singular hyperplane of a transform."""


class TimeStepError(SingformsError):
    """Advection time step violates the CFL-type gate."""


class DecompositionError(SingformsError):
    """A permutation cannot be decomposed within the generator budget."""
