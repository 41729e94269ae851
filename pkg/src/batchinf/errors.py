"""Exception types raised across the package."""


class BatchInfError(Exception):
    """Base class for all package errors."""


class ZeroProbability(BatchInfError, ValueError):
    """An assignment probability is zero where a positive one is required."""


class EmptyArm(BatchInfError, ValueError):
    """An arm has no observations in the cumulative data."""


class NotUnit(BatchInfError, ValueError):
    pass


class NegativeVariance(BatchInfError, ValueError):
    pass


class EmptyInterval(BatchInfError, ValueError):
    pass


class InfeasibleStart(BatchInfError, ValueError):
    """The Gibbs chain initialization violates the constraints."""


class AllPruned(BatchInfError, ValueError):
    pass


class BadEpsilon(BatchInfError, ValueError):
    pass


class MissingWinners(BatchInfError, ValueError):
    pass


class DegenerateTarget(BatchInfError, ValueError):
    """The target direction lies outside the estimable subspace."""


class NonBasisTarget(BatchInfError, ValueError):
    pass


class SingularStack(BatchInfError, ValueError):
    pass


class BracketFailure(BatchInfError, RuntimeError):
    """Root bracketing for a confidence endpoint did not find a sign change."""


class BadPi(BatchInfError, ValueError):
    pass


class ConfigError(BatchInfError, ValueError):
    pass


class RunFailed(BatchInfError, RuntimeError):
    """Too many replications failed for the run to be trusted."""
