"""Exception hierarchy shared by every logcave module."""


class LogCaveError(Exception):
    """Base class for all errors raised by logcave."""


class PreconditionError(LogCaveError, ValueError):
    """An input violates a documented precondition."""


class NumericalFailure(LogCaveError):
    """The LP solver could not drive residuals below the requested tolerance."""


class OutsideHullError(LogCaveError):
    """A query point lies outside the convex hull of the sample."""


class DegenerateLevel(LogCaveError):
    """Requested superlevel exceeds the global maximum of the tent density."""


class DegenerateSampleSet(LogCaveError):
    """Sample points do not affinely span the ambient space."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class SamplerError(LogCaveError):
    """Base class for sampling and volume estimation failures."""


class VolumeFailure(SamplerError):
    """A volume backend could not certify its error."""


class WalkStuck(SamplerError):
    """A random walk could not move inside its body."""


class RetryExhausted(SamplerError):
    """Rejection sampling hit its round cap without accepting."""


class NonFiniteObjective(LogCaveError):
    """An iterate or objective became non-finite."""


class ToleranceNotMet(LogCaveError):
    """A quadrature routine exhausted its budget before reaching tolerance."""


class NeighborhoodCrossing(LogCaveError):
    """A finite-difference step changed the set of tent poles on the envelope."""


class DegenerateSupport(LogCaveError):
    """All sample points coincide."""
