"""Exception types raised across the lab."""


class LabError(Exception):
    """Base class; the CLI turns any of these into exit code 1."""


class ConfigurationError(LabError, ValueError):
    """Invalid parameters or a violated precondition."""


class ConfigParseError(ConfigurationError):
    """Config text error, located by line number and key."""

    def __init__(self, message, key=None, line=None):
        self.key  = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class NumericError(LabError, ArithmeticError):
    """NaN/Inf, overflow, or an iteration that did not converge."""

    def __init__(self, message, step=None, time=None, last_iterate=None):
        super().__init__(message)
        self.step         = step
        self.time         = time
        self.last_iterate = last_iterate


class FormatError(LabError, ValueError):
    """Malformed snapshot or report file."""


class InvariantViolation(LabError, RuntimeError):
    """A state the construction rules out was reached anyway."""
