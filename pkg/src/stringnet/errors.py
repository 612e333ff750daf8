"""Exception hierarchy mapped to CLI exit codes."""


class StringNetError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(StringNetError):
    """Malformed or inconsistent configuration / input data."""

    exit_code = 2


class NumericalAbort(StringNetError):
    """A solver guard tripped (CFL, stretch loss, non-finite values, divergence)."""

    exit_code = 3


class InfeasibleError(StringNetError):
    """The requested control problem is structurally infeasible."""

    exit_code = 4
