"""Exception hierarchy.

Everything raised on purpose by the package derives from ``QRMError`` so the
CLI can map it to an exit code: ``ValidationError`` subclasses are bad input
(exit 2), ``NumericError`` subclasses are numerical failures (exit 3).
"""


class QRMError(Exception):
    pass


class ValidationError(QRMError, ValueError):
    pass


class NumericError(QRMError, ArithmeticError):
    pass


class DegenerateMap(ValidationError):
    """Resultant of numerator and denominator vanishes."""


class ContourTooLarge(ValidationError):
    pass


class NonConvergent(NumericError):
    pass


class NeedsHigherPrecision(NumericError):
    pass


class PeriodTooLarge(ValidationError):
    pass


class RootFindingStalled(NumericError):
    pass


class AmbiguousPeriod(NumericError):
    pass


class NoAdmissiblePair(NumericError):
    pass


class InadmissibleMarking(ValidationError):
    pass


class DegenerateFixedPoints(ValidationError):
    pass


class NotEscaping(ValidationError):
    pass


class UnsupportedPeriod(ValidationError):
    pass


class CommonComponent(ValidationError):
    pass


class ContainsInfinityLine(ValidationError):
    pass


class InadmissiblePath(ValidationError):
    pass


class PoleCollision(ValidationError):
    pass


class FixedPointOnBoundary(NumericError):
    pass
