"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else raised during a run -> 3.
"""


class OffcatError(Exception):
    """Base class for all package errors."""


class ConfigError(OffcatError):
    """Invalid experiment configuration or preset."""


class DataError(OffcatError):
    """Problem with input data files or label values."""


class ParseError(DataError):
    """Structurally malformed input file (wrong column count etc.)."""


class ValidationError(DataError):
    """Well-formed input with invalid content (unknown label etc.)."""
