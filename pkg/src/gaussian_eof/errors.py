"""Exception hierarchy shared by all modules."""


class GaussianEofError(Exception):
    """Base class for errors raised by this package."""


class InputError(GaussianEofError, ValueError):
    """Malformed input: wrong shape, non-finite entries, out-of-domain scalars."""


class InvalidCovarianceError(GaussianEofError, ValueError):
    """The matrix violates the uncertainty relation gamma + i*Omega >= 0."""


class AsymmetricStateError(GaussianEofError, ValueError):
    """The closed-form EoF only covers m == n; other states are rejected."""


class ConditioningError(GaussianEofError, ArithmeticError):
    """Local invariants are inconsistent beyond tolerance."""


class BoundaryStateError(GaussianEofError, ValueError):
    """n == k_x: the balancing squeeze is singular."""


class TruncationError(GaussianEofError, RuntimeError):
    """Fock truncation too coarse for a trustworthy result."""


class TruncationWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass


class RangeError(GaussianEofError, OverflowError):
    """Parameter outside the representable range of the computation."""
