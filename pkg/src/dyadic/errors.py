"""Exception hierarchy shared by all dyadic modules."""


class DyadicError(Exception):
    """Base class for every error raised by the package."""


class InvalidParametersError(DyadicError, ValueError):
    """Model parameters violate their invariants."""


class InvalidStateError(DyadicError, ValueError):
    """A shell field or sequence is malformed or non-finite."""


class RegimeMismatchError(DyadicError):
    """An operation was requested outside the regime where it applies."""


class BranchError(DyadicError, ValueError):
    """No positive root exists for a quadratic step."""


class BracketingError(DyadicError):
    """A shooting bracket does not straddle a sign change."""


class NoSolutionError(DyadicError):
    """A construction failed to produce an acceptable solution."""


class IndeterminateDivergenceError(DyadicError):
    """A divergence profile could not be classified."""


class InsufficientSamplesError(DyadicError, ValueError):
    """Too few trajectory samples for a quadrature check."""
