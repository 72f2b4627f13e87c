"""Exception hierarchy shared across the package.

Grouping mirrors the CLI exit codes: configuration/validation problems,
missing or malformed data, and numerical failures.
"""


class IbhmError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(IbhmError, ValueError):
    """A parameter or domain object violates its invariants."""


class DomainError(ValidationError):
    """An argument lies outside the mathematically valid domain."""


class MeshTooCoarseError(ValidationError):
    """Requested element size yields too few elements to resolve the span."""


class BandConflictError(ValidationError):
    """Selected frequency band overlaps an identified system peak."""


class CalibrationError(ValidationError):
    """Calibration data is degenerate (fewer than two distinct levels)."""


class DataError(IbhmError):
    """Expected records or feature files are missing or unreadable."""


class NumericalError(IbhmError, RuntimeError):
    """A numerical procedure failed to converge or produced garbage."""


class ResonanceError(NumericalError):
    """A response denominator is (numerically) zero: driving frequency at resonance."""


class InstabilityError(NumericalError):
    """Time integration diverged."""


class IdentificationError(NumericalError):
    """No usable spectral peak found in a search window."""


class NoEstimateError(NumericalError):
    """All samples masked out; nothing to estimate from."""
