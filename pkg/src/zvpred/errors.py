"""Exception types shared across the package.

The CLI maps these onto exit codes: validation/format problems exit 2,
I/O problems (including truncated files) exit 1.
"""


class ZvpredError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ZvpredError):
    """A value, shape, or configuration violates a documented contract."""


class FormatError(ZvpredError):
    """A file does not conform to its container format (bad magic, version...)."""


class UndefinedMetricError(ZvpredError):
    """A requested metric has no defined value (e.g. zero denominator)."""


class DataIOError(ZvpredError, OSError):
    """An I/O level failure, e.g. a file truncated mid-record."""
