"""Exception types shared across the package.

Argument/precondition violations raise plain ``ValueError``; the classes
here cover failures that callers may want to distinguish from bad inputs.
"""


class VoxstyleError(Exception):
    """Base class for package-specific errors."""


class FormatError(VoxstyleError):
    """A file or stream does not conform to its declared format."""


class UnsupportedFormatError(VoxstyleError):
    """The format is recognized but the codec/layout is not supported."""


class NumericError(VoxstyleError):
    """A numeric procedure failed (non-convergence, NaN propagation)."""
