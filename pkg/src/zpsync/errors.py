"""Exception types shared across the package."""


class ZpsyncError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ZpsyncError, ValueError):
    """A configuration value or file violates its contract."""


class DegeneratePdpError(ZpsyncError):
    """Duplicate decay rates make the closed-form density singular."""


class NumericalFailure(ZpsyncError, ArithmeticError):
    """A numeric routine produced NaN/inf instead of a usable value.

    Raised instead of silently returning a garbage density or likelihood.
    """
