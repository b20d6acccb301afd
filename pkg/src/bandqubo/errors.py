"""Exception hierarchy shared across the package.

Commands map these onto process exit codes, so keep the split stable:
feasibility problems and solver refusals are distinguishable from plain
bad input.
"""


class BandQuboError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(BandQuboError):
    """Malformed input file; the message carries the offending line number."""


class ValidationError(BandQuboError):
    """Data violates a structural invariant (prices, dates, matrices, bands)."""


class InsufficientDataError(BandQuboError):
    """Not enough history for the requested computation."""


class EncodingError(BandQuboError):
    """Band widths cannot be represented with the requested bit encoding."""


class FeasibilityError(BandQuboError):
    """Band configuration admits no fully invested portfolio."""


class ConfigError(BandQuboError):
    """Bad or inconsistent run configuration."""


class SolverCapError(BandQuboError):
    """Problem exceeds the exhaustive solver's bit cap."""
