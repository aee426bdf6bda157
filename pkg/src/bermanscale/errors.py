"""Semantic exception hierarchy.

Every error raised by this package derives from :class:`BermanScaleError`,
so callers can catch one type at the boundary (the CLI maps config errors
to exit code 2 and mathematical-domain errors to exit code 3).
"""


class BermanScaleError(Exception):
    """Base class for all package errors."""


class ConfigError(BermanScaleError):
    """Malformed run configuration (CLI exit code 2)."""


class MathDomainError(BermanScaleError):
    """Base for mathematical-domain failures (CLI exit code 3)."""


# correlation models
class NotSquareError(MathDomainError):
    pass


class NotUnitDiagonalError(MathDomainError):
    pass


class AsymmetryTooLargeError(MathDomainError):
    pass


class NotPSDError(MathDomainError):
    """Matrix is not positive semidefinite within tolerance."""


class InvalidDeltaError(MathDomainError):
    """Hüsler–Reiss rate sequence entries must be positive."""


class DimensionMismatchError(MathDomainError):
    pass


# scaling laws
class WrongRegimeError(MathDomainError):
    """Operation requires the other scaling regime."""


class RegimeMismatchError(WrongRegimeError):
    """A bound was asked to use a scaling model from the wrong regime."""


class EvaluationDomainError(MathDomainError):
    """Law cannot be evaluated where the diagnostic needs it."""


class ParamOutOfRangeError(MathDomainError):
    pass


# probability engine
class BadSpecError(MathDomainError):
    """Rectangle specification is inconsistent (e.g. lower >= upper)."""


class DimTooLargeError(MathDomainError):
    """Deterministic quadrature supports dimension <= 3 only."""


class TolUnreachableError(MathDomainError):
    """Adaptive quadrature could not certify the requested tolerance."""


# extreme-value module
class TruncationTooDeepError(MathDomainError):
    pass


class BadEtaError(MathDomainError):
    """Observed fraction must lie in (0, 1]."""


class ScheduleInvalidError(MathDomainError):
    """Block/separation schedules need exponents 0 < rho_l < rho_r < 1."""
