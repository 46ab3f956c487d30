"""Exception hierarchy shared by all modules."""


class MosumError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(MosumError, ValueError):
    """Invalid parameters, window sets, change configurations or rule/field mismatch."""


class WindowRangeError(ConfigurationError):
    """A time index lies outside the admissible range ``[h, T - h]``."""


class DomainError(MosumError, ValueError):
    """A correlation parameter is outside the open interval (-1, 1)."""


class DegenerateWindowError(MosumError, ArithmeticError):
    """Both windows have zero variance (or zero fourth-moment spread)."""


class DegenerateEstimateError(MosumError, ValueError):
    """An effect was requested at a grid point whose statistic is missing."""


class DataFormatError(MosumError, ValueError):
    """Malformed input data. ``lineno`` holds the offending 1-based line."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class CacheIntegrityError(MosumError):
    """Two cache records share a key but disagree on the payload."""
