"""Exception hierarchy shared across the package."""


class SmallPError(Exception):
    """Base class for all package errors."""


class ConfigError(SmallPError, ValueError):
    """Invalid user input: bad flags, malformed files, inconsistent dimensions."""


class NumericalError(SmallPError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class NotPositiveDefiniteError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class SamplerError(NumericalError):
    """An MCMC chain reached an invalid or pathological state."""


class MultilevelDegeneracyError(NumericalError):
    """The multi-level CE iteration stalled or exhausted its iteration cap."""
