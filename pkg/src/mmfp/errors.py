"""Exception hierarchy shared across the toolkit."""


class MmfpError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(MmfpError, ValueError):
    """An argument violates an operation's preconditions."""


class DomainError(MmfpError):
    """A point lies outside the open domain of an objective term.

    Carries the offending term index when known.
    """

    def __init__(self, message: str, term_index: int | None = None):
        super().__init__(message)
        self.term_index = term_index


class IllConditionedError(MmfpError):
    """A matrix is too close to singular for a reliable inverse/solve."""


class NotPsdError(MmfpError):
    """A matrix expected to be positive semidefinite has a significantly
    negative eigenvalue."""


class InvalidStartError(MmfpError):
    """A solver was started from an infeasible or out-of-domain point."""


class MonotonicityError(MmfpError):
    """The objective decreased beyond tolerance across an MM iteration.

    Signals an implementation bug (the surrogate construction guarantees
    ascent), never a data condition.
    """


class ConfigError(MmfpError):
    """An experiment configuration is malformed or inconsistent."""
