"""Exception hierarchy shared by all modules."""


class DegeneracyError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(DegeneracyError, ValueError):
    """Bad dimensions, non-finite coordinates, or out-of-range parameters."""


class RankDeficiencyError(DegeneracyError, ValueError):
    """A least-squares system does not have full column rank."""


class CapExceededError(DegeneracyError):
    """Exhaustive enumeration was requested above the configured point cap."""

    def __init__(self, n_points: int, cap: int, k: int):
        self.n_points = n_points
        self.cap = cap
        self.k = k
        super().__init__(
            f"exhaustive {k}-subset enumeration needs N <= {cap}, got N = {n_points}; "
            "use sampled mode or raise the cap"
        )
