"""Exception types raised across the package."""


class PwclustError(Exception):
    """Base class for all package errors."""


class DomainError(PwclustError, ValueError):
    """A value lies outside [0, 1); usually means the data was not normalized."""


class DegenerateInputError(PwclustError, ValueError):
    """All values are identical, so no non-zero gap exists."""


class InputTooShortError(PwclustError, ValueError):
    """A sample is too short for the requested window or separation."""


class PreconditionError(PwclustError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateDistanceError(PwclustError, ValueError):
    """Farthest-point initialization would pick an existing center twice."""


class UnsupportedOracleError(PwclustError, ValueError):
    """The process has no exact measure oracle (e.g. a rotation)."""


class EnumerationLimitError(PwclustError, ValueError):
    """Exact enumeration of state tuples would exceed the configured guard."""
