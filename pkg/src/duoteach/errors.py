"""Exception hierarchy shared across the package."""


class DuoteachError(Exception):
    """Base class for all package errors."""


class DimensionError(DuoteachError):
    """Operand shapes are incompatible."""


class TapeError(DuoteachError):
    """Autodiff contract violation (non-scalar backward, tape reuse, mixed tapes)."""


class ConfigError(DuoteachError):
    """Invalid configuration value or argument."""


class FormatError(DuoteachError):
    """Dataset file has the right syntax but violates structural expectations."""


class ParseError(FormatError):
    """A line of a dataset file could not be parsed."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class DegenerateInputError(DuoteachError):
    """Numerically degenerate input (e.g. a zero-norm representation row)."""


class TrainingDivergedError(DuoteachError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, message="non-finite training loss"):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch
