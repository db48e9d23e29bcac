"""Exception hierarchy shared by every module in the package."""


class CienetError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(CienetError):
    """An array argument has the wrong rank, length, or axis size."""


class ParameterError(CienetError):
    """A scalar argument or configuration value is out of range."""


class DomainError(CienetError):
    """An operation was applied to data in the wrong representation,
    e.g. synthesizing a spectrogram that is still magnitude-compressed."""


class FormatError(CienetError):
    """A serialized model file is malformed or truncated."""


class GradientUndefinedError(CienetError):
    """The requested gradient does not exist at the evaluation point."""
