"""Named failure modes.

Precondition errors map to CLI exit code 2; :class:`CertificationError`
maps to exit code 3.
"""


class PreconditionError(ValueError):
    """Base class for violated input preconditions."""


class DegenerateLeadingTerm(PreconditionError):
    """A leading coefficient required by the normal form vanishes."""


class NotResonant(PreconditionError):
    """The series contains exponents outside the resonant lattice."""


class NotRealValued(PreconditionError):
    """The series is not the complex form of a real function."""


class NotAreaPreserving(PreconditionError):
    """A map jet fails the area-preservation identity."""

    def __init__(self, message, residual=None, order=None):
        super().__init__(message)
        self.residual = residual
        self.order = order


class CertificationError(RuntimeError):
    """An internal rank, solve or residual certificate failed."""
