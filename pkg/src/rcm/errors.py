class RcmError(Exception):
    """Base class for toolkit errors."""


class ConfigError(RcmError):
    """Invalid or inconsistent run configuration."""


class NumericalError(RcmError):
    """A solver or integrator failed to reach its tolerance."""


class BracketingError(RcmError):
    """A root or threshold search bracket does not contain a crossing."""


class CheckFailure(RcmError):
    """A statistical self-check rejected the computed result."""
