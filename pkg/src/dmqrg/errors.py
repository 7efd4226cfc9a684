"""Exception types.

Validation problems are ``ValueError`` subclasses; everything deriving from
``NumericalError`` signals that a computation could not produce a
trustworthy number.
"""


class DMQRGError(Exception):
    """Base class for all package errors."""


class NumericalError(DMQRGError):
    pass


class NonHermitianInput(NumericalError, ValueError):
    pass


class NotPositiveSemidefinite(NumericalError, ValueError):
    pass


class StepTooLarge(NumericalError):
    """The finite-difference stencil straddles the saturation boundary."""


class NoMinimumBracketed(NumericalError):
    pass


class DegenerateFit(NumericalError):
    pass


class AmbiguousGroundSpace(NumericalError):
    pass


class MalformedResultFile(DMQRGError, ValueError):
    pass
