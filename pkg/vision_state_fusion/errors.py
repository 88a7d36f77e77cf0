"""Exception hierarchy shared by the library and the command-line harness.

Every exception carries the process exit status the CLI reports for it:
1 for usage errors, 2 for data/format errors, 3 for numeric failures.
"""


class VisionStateFusionError(Exception):
    """Base class for all errors raised on purpose by this package."""
    exit_code = 1


class UsageError(VisionStateFusionError):
    exit_code = 1


class UnknownPresetError(UsageError, KeyError):
    """Raised when a registry id, layer kind or variant name is unknown."""

    def __str__(self):
        return Exception.__str__(self)


class DataFormatError(VisionStateFusionError):
    exit_code = 2


class BadMagicError(DataFormatError):
    pass


class VersionMismatchError(DataFormatError):
    pass


class TruncatedFileError(DataFormatError):
    pass


class SchemaMismatchError(DataFormatError):
    """State or label layout of a dataset does not fit a model."""
    pass


class RenderError(DataFormatError, ValueError):
    pass


class EmptyGroupError(DataFormatError):
    pass


class NumericalError(VisionStateFusionError, ArithmeticError):
    exit_code = 3
