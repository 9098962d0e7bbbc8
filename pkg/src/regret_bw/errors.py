"""Exception hierarchy.

Every error carries the process exit code the CLI reports for it:
2 for configuration problems, 3 for bad input data, 4 for numeric or
degenerate situations.
"""

from __future__ import annotations


class RegretBWError(Exception):
    exit_code = 4


class ConfigurationError(RegretBWError, ValueError):
    exit_code = 2


class EnumerationTooLargeError(ConfigurationError):
    """Exact enumeration or brute-force search would exceed its size guard."""


class DataError(RegretBWError, ValueError):
    exit_code = 3


class InvalidDesignError(DataError):
    pass


class DimensionError(DataError):
    pass


class DomainError(DataError):
    pass


class DatasetParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(RegretBWError):
    exit_code = 4


class DegenerateBandwidthError(NumericError):
    def __init__(self, message: str, arm: str | None = None):
        super().__init__(message)
        self.arm = arm


class NoFeasibleBandwidthError(NumericError):
    pass


class NonBinaryValueError(DatasetParseError, DomainError):
    """An outcome or treatment indicator outside {0, 1}."""
