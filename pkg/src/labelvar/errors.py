"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes, so library code should raise the most
specific class that applies rather than bare ValueError.
"""


class LabelVarError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LabelVarError):
    """Invalid configuration or incompatible arguments (CLI exit code 1)."""


class DataFormatError(LabelVarError):
    """Malformed or truncated input files / schemas (CLI exit code 2)."""


class NumericError(LabelVarError):
    """Non-finite values or diverging computations (CLI exit code 3)."""


class VerificationFailure(LabelVarError):
    """A verification suite did not pass (CLI exit code 4)."""
