"""Exception hierarchy.

Everything raised on purpose derives from :class:`PropoptError`.  The CLI maps
:class:`ValidationError` (bad input, bad config) to exit code 1 and every other
:class:`PropoptError` to exit code 2.
"""


class PropoptError(Exception):
    """Base class for all package errors."""


class ValidationError(PropoptError, ValueError):
    """Input that violates a documented precondition (shape, range, schema)."""


class RegistryError(ValidationError, KeyError):
    """Unknown benchmark function name."""

    def __str__(self):
        return Exception.__str__(self)


class ConfigError(ValidationError):
    """Sweep configuration file is missing, malformed or inconsistent."""


class ConvexityError(PropoptError):
    """A system matrix that must be positive definite failed to factorize."""


class RankError(PropoptError):
    """Linear system is singular because some coordinates are unconstrained."""


class SamplingError(PropoptError):
    """Sampled design matrix is rank deficient."""


class IterationLimitError(PropoptError):
    """Iterative solver hit ``max_iters`` before meeting its tolerance."""

    def __init__(self, message, last_gap=float("nan")):
        super().__init__(message)
        self.last_gap = last_gap


class SolverError(PropoptError):
    """A solve finished but its solution fails the residual certificate."""


class OutputError(PropoptError):
    """A result file could not be written."""
