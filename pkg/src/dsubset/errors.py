"""Exception hierarchy shared by every module of the package."""


class DSubsetError(Exception):
    """Base class for computation errors (CLI exit code 2)."""


class InvalidSubsetError(DSubsetError, ValueError):
    """A subset refers to rows that do not exist or repeats a row."""


class SingularUniverseError(DSubsetError):
    """The information matrix of the whole regressor set is singular."""


class RankDeficientError(DSubsetError):
    """A projection heuristic ran out of directions before finishing.

    Attributes
    ----------
    rank : int
        Number of linearly independent regressors found before exhaustion.
    """

    def __init__(self, rank, needed):
        self.rank = rank
        self.needed = needed
        super().__init__(
            f"regressor set is rank deficient: achieved rank {rank}, needed {needed}"
        )


class InstanceTooLargeError(DSubsetError):
    """Exhaustive enumeration would exceed the configured guard."""


class InfeasibleSizeError(DSubsetError, ValueError):
    """Requested subset size cannot be drawn from the regressor set."""


class ConvergenceError(DSubsetError):
    """Iterative solver hit its iteration cap.

    Attributes
    ----------
    gap : float
        Relative certificate gap ``max_i h_i / m - 1`` at termination.
    """

    def __init__(self, gap, iterations):
        self.gap = gap
        self.iterations = iterations
        super().__init__(
            f"no convergence after {iterations} iterations (certificate gap {gap:.3e})"
        )


class AllRunsSingularError(DSubsetError):
    """Every run of a multi-run strategy produced a singular subset."""

    def __init__(self, attempts):
        self.attempts = attempts
        super().__init__(f"all {attempts} runs produced singular subsets")
