"""Exception types shared across the simulator."""


class WipersimError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(WipersimError, ValueError):
    """A parameter violates its documented range or shape constraint."""


class ProtocolViolationError(WipersimError, RuntimeError):
    """An event was fed to the relay state machine that is impossible for
    the current phase; signals a bug in the driving simulation."""


class PnmError(WipersimError, ValueError):
    """Malformed or unsupported PGM/PPM data."""


class ConfigError(WipersimError, ValueError):
    """Run configuration file could not be parsed or validated."""
