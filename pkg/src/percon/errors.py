"""Exception hierarchy shared by all percon modules.

Everything raised here is an input/validation problem and maps to CLI
exit code 2; any other exception escaping a command is an internal
error and maps to exit code 1.
"""


class PerconError(Exception):
    """Base class for all percon input/validation errors."""


class FormatError(PerconError):
    """Tensor container is malformed (bad magic, header, or trailing bytes)."""


class UnsupportedDtypeError(PerconError):
    """Tensor dtype is outside the supported set."""


class TruncationError(PerconError):
    """Tensor payload is shorter than the header promises."""


class SchemaError(PerconError):
    """Manifest document violates the manifest schema."""


class ShapeError(PerconError):
    """Grids that must agree in shape do not."""


class ValidationError(PerconError):
    """Values violate a documented invariant (non-finite, out of range, ...)."""


class InsufficientFramesError(PerconError):
    """An operation over a video needs more frames than are present."""


class UndefinedMeasureError(PerconError):
    """A statistic is undefined for the given input (zero variance, empty mask)."""
