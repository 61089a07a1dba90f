"""Exception hierarchy for advlin.

Every error raised by this package derives from :class:`AdvlinError`, so
callers (including the CLI) can catch one type and map it to a nonzero
exit code with a message.
"""


class AdvlinError(Exception):
    """Base class for all advlin errors."""


class ContractViolationError(AdvlinError):
    """An argument violates a documented precondition (dimension mismatch,
    negative attack radius, out-of-range configuration value, ...)."""


class FactorizationError(AdvlinError):
    """A matrix that must be symmetric positive definite is not."""


class SingularPointError(AdvlinError):
    """Derivative requested at a point where it is undefined (the risk is
    non-smooth at the zero vector and at the true coefficient vector)."""


class DegenerateModelError(AdvlinError):
    """The target coefficient vector is zero; shrinkage thresholds are
    undefined."""


class SolverFailureError(AdvlinError):
    """Root bracketing or bisection failed to converge."""


class RankError(AdvlinError):
    """Least squares requested on a rank-deficient design (n <= p or a
    singular Gram matrix)."""


class ConfigurationError(AdvlinError):
    """Inconsistent estimator configuration (e.g. more CV folds than rows)."""


class RegimeError(AdvlinError):
    """Operation only defined in the interior shrinkage regime was called
    on a boundary solution."""


class TransitionPointError(AdvlinError):
    """Error decomposition requested exactly at the lower regime threshold,
    where the expansion changes branch."""


class NumericError(AdvlinError):
    """A numeric sanity check failed (e.g. negative variance estimate)."""
