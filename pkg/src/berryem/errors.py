"""Exception hierarchy. Every library failure derives from ``BerryEMError``."""


class BerryEMError(Exception):
    """Base class for all library errors."""


class NumericalFailure(BerryEMError):
    """A computation could not deliver a trustworthy number."""


class DomainError(BerryEMError, ValueError):
    """Inputs lie outside the region where a model or formula is defined."""


class NotPositiveDefinite(NumericalFailure):
    pass


class EvaluationOutsideDomain(DomainError):
    pass


class ResonanceSingularity(DomainError):
    pass


class DegenerateDenominator(DomainError, ZeroDivisionError):
    pass


class NoRootInBracket(NumericalFailure):
    pass


class EvanescentBranch(DomainError):
    pass


class BandNotFound(DomainError):
    pass


class DegeneratePoint(NumericalFailure):
    pass


class NonConvergent(NumericalFailure):
    """Raised when a Chern integral stays away from an integer.

    The offending result is kept on ``.result`` so callers can still report it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class PolarSingularity(DomainError):
    pass


class DegeneratePath(DomainError):
    pass


class ImproperSheet(DomainError):
    pass


class NoSolution(BerryEMError):
    """No surface-mode root on the requested side. A physical answer, not a bug."""


class BelowPlasmaFrequency(DomainError):
    pass


class PerturbationTooLarge(DomainError):
    pass


class ResolutionInsufficient(DomainError):
    pass
