"""Tent parameters, tent densities and the likelihood objective.

A tent density is ``p(x) = exp(h(x) - A(y))`` on the hull of the sample,
where ``h`` is the tent function with pole heights ``y`` and
``A(y) = ln integral exp(h)``.  The optimizer maximizes the surrogate
``F(y) = mean(y) - A(y)``; the reported log-likelihood is
``sum_i h(X_i) - n A(y)``, which is the true likelihood even when some poles
sit below the tent.
"""

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .errors import PreconditionError
from .lp_core import OUTSIDE_HULL, SampleSet, TentLP, heights_of, tent_evaluate
from .sampler import LogPartitionEstimate, SamplerConfig, estimate_log_partition

__all__ = ["TentParams", "TentDensity", "ObjectiveValue", "tent_density_value",
           "objective_value", "stochastic_subgradient", "pole_values"]

SUM_TOL = 1e-9
# partition estimates need delta < 1/16; coarser requests are served at this
_MAX_PARTITION_DELTA = 0.05


@dataclass(frozen=True, eq=False)
class TentParams:
    """Pole heights ``y`` (nats) normalized so that ``sum(y) == 0``."""

    y: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float).reshape(-1)
        if y.size == 0 or not np.all(np.isfinite(y)):
            raise PreconditionError("heights must be a non-empty finite vector")
        if abs(y.sum()) > SUM_TOL * max(1.0, np.abs(y).sum()):
            raise PreconditionError("heights must sum to zero; use TentParams.normalized")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @classmethod
    def normalized(cls, y):
        """Shift ``y`` to mean zero.  The shift does not change the density."""
        y = np.asarray(y, dtype=float).reshape(-1)
        return cls(y - y.mean())

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n))

    @property
    def n(self):
        return self.y.size

    def __len__(self):
        return self.y.size

    def __array__(self, dtype=None, copy=None):
        return self.y if dtype is None else self.y.astype(dtype)

    def __repr__(self):
        return f"TentParams({np.array2string(self.y, precision=6)})"


@dataclass(frozen=True, eq=False)
class TentDensity:
    """A tent density with an optional cached log-partition estimate."""

    samples: SampleSet
    params: TentParams
    log_partition: Optional[LogPartitionEstimate] = None

    def __post_init__(self):
        if self.params.n != self.samples.n:
            raise PreconditionError("one height per sample point is required")

    def with_log_partition(self, cfg: SamplerConfig, rng=None):
        est = estimate_log_partition(self.samples, self.params, cfg, rng)
        return replace(self, log_partition=est)

    def log_value(self, x):
        """``h(x)`` without normalization, or :data:`OUTSIDE_HULL`."""
        return tent_evaluate(self.samples, self.params, x)


def tent_density_value(td: TentDensity, x, delta, tau, rng=None):
    """``exp(h(x) - A)``, and exactly 0 outside the hull.

    The cached estimate is used when it was made with accuracy at least
    ``delta``; otherwise one is computed (at ``min(delta, 0.05)``).
    """
    if not (0 < delta < 1 and 0 < tau < 1):
        raise PreconditionError("delta and tau must lie in (0, 1)")
    h = td.log_value(x)
    if h is OUTSIDE_HULL:
        return 0.0
    est = td.log_partition
    if est is None or est.delta > delta:
        cfg = SamplerConfig(delta=min(delta, _MAX_PARTITION_DELTA), tau=tau)
        est = estimate_log_partition(td.samples, td.params, cfg, rng)
    return float(np.exp(h - est.value))


@dataclass(frozen=True)
class ObjectiveValue:
    """Surrogate ``F = mean(y) - A`` and log-likelihood ``sum h(X_i) - n A``."""

    surrogate: float
    loglik: float


def pole_values(X: SampleSet, y):
    """``h(X_i)`` for every sample point."""
    lp = TentLP(X, y)
    return np.array([lp.value(X.points[:, i]) for i in range(X.n)])


def objective_value(X: SampleSet, y, log_partition: Union[float, LogPartitionEstimate]):
    """Evaluate both objectives given an estimate of ``A(y)``.

    >>> X = SampleSet([[0.0, 1.0]])
    >>> objective_value(X, [0.0, 0.0], 0.0)
    ObjectiveValue(surrogate=0.0, loglik=0.0)
    """
    A = float(getattr(log_partition, "value", log_partition))
    yv = heights_of(y)
    h = pole_values(X, yv)
    return ObjectiveValue(surrogate=float(yv.mean() - A),
                          loglik=float(h.sum() - X.n * A))


def stochastic_subgradient(X: SampleSet, y, s):
    """``(1/n) 1 - T(s)``: one-sample estimate of a supergradient of ``F``.

    Raises :class:`OutsideHullError` when ``s`` is off the hull.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape != (X.d,):
        raise PreconditionError(f"sample must have dimension {X.d}")
    T = TentLP(X, y).statistic(s).weights
    return np.full(X.n, 1.0 / X.n) - T
