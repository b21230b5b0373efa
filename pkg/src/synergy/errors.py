"""Exception types raised across the toolkit."""


class SynergyError(Exception):
    """Base class for all toolkit errors."""


class FormatError(SynergyError, ValueError):
    """A file does not follow its declared layout (header, row widths, quoting)."""


class ParseError(SynergyError, ValueError):
    """A value or token could not be parsed.

    ``offset`` is the byte offset into the parsed text when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class DuplicateKeyError(SynergyError, ValueError):
    pass


class MissingKeyError(SynergyError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class InvalidInstanceError(SynergyError, ValueError):
    pass


class ShapeError(SynergyError, ValueError):
    pass


class NumericError(SynergyError, ValueError):
    """Non-finite values where finite ones are required."""


class DivergenceError(NumericError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss!r})")
        self.epoch = epoch
        self.loss = loss


class InvariantError(SynergyError, ValueError):
    pass


class DegenerateSampleError(SynergyError, ValueError):
    pass


class UndefinedCorrelationError(SynergyError, ValueError):
    pass


class ConfigError(SynergyError, ValueError):
    """Configuration validation failure; ``field`` names the offending key."""

    def __init__(self, message, field=None, line=None):
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"`{field}`")
        prefix = ": ".join([" ".join(parts)]) + ": " if parts else ""
        super().__init__(prefix + message)
        self.reason = message
        self.field = field
        self.line = line
