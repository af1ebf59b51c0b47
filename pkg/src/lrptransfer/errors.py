"""Exception types shared across the package."""


class LrpTransferError(Exception):
    """Base class for all package errors."""


class RegistryError(LrpTransferError):
    """Unknown channel set or study condition name."""


class ChannelMissingError(LrpTransferError):
    """A requested channel is absent from a recording."""


class ParseError(LrpTransferError):
    """Malformed acquisition file. Carries file and line context."""

    def __init__(self, message, path=None, line=None):
        ctx = ""
        if path is not None:
            ctx = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + ctx)
        self.path = path
        self.line = line


class SyncError(LrpTransferError):
    """EEG and motion streams cannot be aligned."""


class ContainerError(LrpTransferError):
    """Cache container cannot be read or written."""


class ContainerFormatError(ContainerError):
    """Bad magic bytes or malformed container header."""


class ContainerVersionError(ContainerError):
    """Container schema version is newer than this package supports."""


class ChecksumError(ContainerError):
    """A container block failed its CRC32 check."""


class DegenerateTrialError(LrpTransferError):
    """Motion trace carries no usable movement (zero peak velocity)."""


class NoOnsetError(LrpTransferError):
    """Backward search found no sub-threshold sample before trial start."""


class FlatChannelError(LrpTransferError):
    """A window channel has zero variance and cannot be standardized."""

    def __init__(self, channel):
        super().__init__(f"zero-variance channel cannot be standardized: {channel}")
        self.channel = channel


class InsufficientHistoryError(LrpTransferError):
    """Recording does not cover the 5 s of pre-onset data a trial needs."""


class FitError(LrpTransferError):
    """Model fitting failed."""


class SingleClassError(FitError):
    """Training data contains only one class."""


class ConvergenceError(FitError):
    """An iterative solver did not converge within its iteration cap."""


class EvalError(LrpTransferError):
    """Evaluation input is malformed (e.g. a class absent from ground truth)."""
