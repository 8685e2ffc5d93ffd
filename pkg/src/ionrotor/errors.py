"""Exception types shared across the package."""


class SingularConfigurationError(ValueError):
    """Raised when two ions coincide and the Coulomb energy diverges."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance.

    The message carries the last residual so failed minimizations and
    under-resolved basis sets can be diagnosed without re-running.
    """
