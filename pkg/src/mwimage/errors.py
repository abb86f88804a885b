"""Exception types shared across the package."""


class MwimageError(Exception):
    """Base class for mwimage errors."""


class DataError(MwimageError):
    """Malformed or inconsistent input data (files, headers, records)."""


class NumericalError(MwimageError):
    """A numerical procedure failed to converge or produced invalid values."""
