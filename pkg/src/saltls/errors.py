"""Exception types shared across the package."""


class SaltlsError(Exception):
    """Base class for all library errors."""


class RankDeficient(SaltlsError):
    """Input matrix is numerically rank deficient.

    Carries the offending smallest singular value in ``sigma_k``.
    """

    def __init__(self, message, sigma_k=None):
        super().__init__(message)
        self.sigma_k = sigma_k


class RankFailure(SaltlsError):
    """An iterative routine lost rank and could not recover."""


class GapUndefined(SaltlsError):
    """Relative spectral gap is undefined (sigma_k == 0 or gamma_k == 0)."""


class ZeroInput(SaltlsError):
    """An input that must be nonzero was identically zero."""


class InvalidProbability(SaltlsError):
    """Sampling probability outside (0, 1]."""


class InvalidSplit(SaltlsError):
    """Split count t < 1 or otherwise malformed."""


class CoherenceUnachievable(SaltlsError):
    """Rejection sampling failed to reach the requested coherence target."""


class NoiseInfeasible(SaltlsError):
    """Requested noise level cannot satisfy the row/entry ceilings."""


class UsageError(SaltlsError):
    """Bad command line arguments or unreadable input files."""
