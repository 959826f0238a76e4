"""Level-set decomposition and rejection sampling from a tent density.

With ``M = exp(max h)`` the dyadic superlevel sets are
``L_i = {exp(h) >= M 2**-i}``.  Choosing level ``i`` with probability
proportional to ``2**-i vol(L_i)`` (the last level counted twice) and then a
uniform point of ``L_i`` draws from the density proportional to the step
function ``G`` with ``G/2 <= exp(h) <= G`` on the covered region.  Accepting
with probability ``exp(h)/G`` then yields the tent density, and the mean
acceptance probability times ``M`` times the mixture normalizer estimates
the partition function.
"""

from dataclasses import dataclass, field
from math import ceil, exp, log, sqrt
from typing import Optional

import numpy as np

from ..errors import PreconditionError, RetryExhausted, SamplerError
from ..lp_core import OUTSIDE_HULL, SampleSet, TentLP, heights_of
from .bodies import TentLevelSet
from .config import SamplerConfig
from .volume import volume_with_error
from .walk import uniform_sample

__all__ = ["LevelSetDecomposition", "build_decomposition", "level_count", "alpha_trials",
           "TentSampler", "sample_tent", "LogPartitionEstimate",
           "estimate_log_partition"]

LN2 = log(2.0)
_SANDWICH_TOL = 1e-7


def level_count(y):
    """``ceil(1 + 2 ||y||_inf)``, the number of dyadic levels."""
    return int(ceil(1 + 2 * float(np.abs(heights_of(y)).max())))


@dataclass(frozen=True, eq=False)
class LevelSetDecomposition:
    """Immutable description of the proposal mixture.

    Attributes
    ----------
    log_M : float
        ``max h``, attained at a sample point.
    m : int
        Level count from the ``ceil(1 + 2 ||y||_inf)`` rule.
    levels : int
        Levels actually used.  At least ``m``, raised until the last level
        covers the hull, unless the tail is truncated (see ``truncated``).
    log_levels : ndarray
        ``log_M - i ln 2`` for ``i = 1..levels``.
    volumes : ndarray
        Estimated volumes of ``L_1..L_levels``.
    c_tilde : float
        ``sum_i 2**-i vol_i + 2**-levels vol_levels``.
    weights : ndarray
        Level probabilities; the last entry carries the doubled term.
    """

    samples: SampleSet
    y: np.ndarray
    log_M: float
    m: int
    levels: int
    log_levels: np.ndarray
    volumes: np.ndarray
    c_tilde: float
    weights: np.ndarray
    hull_volume: float
    cover_level: int
    truncated: bool
    tail_mass_bound: float
    volume_rel_error: float
    bodies: tuple = field(repr=False)

    @property
    def M(self):
        return exp(self.log_M)

    def log_G(self, h):
        """``log G`` at a point with tent value ``h``."""
        j = ceil((self.log_M - h) / LN2 - 1e-12)
        j = min(max(j, 1), self.levels)
        return self.log_M - (j - 1) * LN2


def build_decomposition(X: SampleSet, y, cfg: SamplerConfig, rng=None, *,
                        hull_volume=None) -> LevelSetDecomposition:
    """Build the dyadic level sets of ``exp(h)`` and their mixture weights.

    The number of levels is ``m = ceil(1 + 2 ||y||_inf)``, raised to the
    first level containing the whole hull (levels are ``ln 2`` apart in
    log-density, so ``m`` alone may stop short).  Levels below the point
    where the remaining mass is provably under ``delta / 4`` of the total
    are dropped.  Levels at or past the hull-covering one reuse the hull
    volume.
    """
    yv = heights_of(y)
    if yv.shape != (X.n,):
        raise PreconditionError(f"expected {X.n} heights")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    lp = TentLP(X, yv)
    h_poles = np.array([lp.value(X.points[:, i]) for i in range(X.n)])
    log_M = float(h_poles.max())
    h_low = float(h_poles.min())
    m = level_count(yv)
    cover = max(1, ceil((log_M - h_low) / LN2 - 1e-12))
    wanted = max(m, cover)

    hull = TentLevelSet(X, yv, None)
    n_vol = min(cover, wanted)
    tau_each = cfg.tau / (n_vol + 1)
    worst = 0.0
    if hull_volume is None:
        est = volume_with_error(hull, cfg, rng, tau=tau_each)
        hull_volume, worst = est.value, est.rel_error

    bodies, vols = [], []
    c_partial = 0.0
    truncated = False
    for i in range(1, wanted + 1):
        if i >= cover:
            body, v = hull, hull_volume
        else:
            body = TentLevelSet(X, yv, log_M - i * LN2)
            est = volume_with_error(body, cfg, rng, tau=tau_each)
            v = est.value
            worst = max(worst, est.rel_error)
        bodies.append(body)
        vols.append(v)
        c_partial += 2.0 ** -i * v
        # mass outside L_i is at most M 2**-i vol(hull); the total is at
        # least M c_tilde / 2, with c_tilde >= c_partial
        if i < cover and 2.0 ** (1 - i) * hull_volume <= 0.25 * cfg.delta * c_partial:
            truncated = True
            break
    levels = len(vols)
    volumes = np.array(vols)
    scaled = volumes * 2.0 ** -np.arange(1, levels + 1)
    scaled[-1] *= 2.0
    c_tilde = float(scaled.sum())
    weights = scaled / c_tilde
    tail = 2.0 ** (1 - levels) * hull_volume / c_tilde if truncated else 0.0
    return LevelSetDecomposition(
        samples=X, y=yv, log_M=log_M, m=m, levels=levels,
        log_levels=log_M - LN2 * np.arange(1, levels + 1), volumes=volumes,
        c_tilde=c_tilde, weights=weights, hull_volume=float(hull_volume),
        cover_level=cover, truncated=truncated, tail_mass_bound=tail,
        volume_rel_error=worst, bodies=tuple(bodies))


class TentSampler:
    """Rejection sampler for one decomposition; keeps acceptance counters."""

    def __init__(self, decomposition: LevelSetDecomposition, cfg: SamplerConfig):
        self.dec = decomposition
        self.cfg = cfg
        self.lp = TentLP(decomposition.samples, decomposition.y)
        self._cum = np.cumsum(decomposition.weights)
        self._cum[-1] = 1.0
        self.proposals = 0
        self.accepted = 0
        self.ratio_sum = 0.0
        self.sandwich_violations = 0

    @property
    def acceptance_rate(self):
        return self.accepted / self.proposals if self.proposals else float("nan")

    def propose(self, rng):
        """One proposal ``(z, h(z), exp(h(z)) / G(z))``."""
        i = int(np.searchsorted(self._cum, rng.random(), side="right"))
        i = min(i, self.dec.levels - 1)
        z = uniform_sample(self.dec.bodies[i], self.cfg, rng)
        h = self.lp.value(z)
        if h is OUTSIDE_HULL:
            raise SamplerError("walk left the convex hull")
        ratio = exp(h - self.dec.log_G(h))
        if ratio > 1 + _SANDWICH_TOL or ratio < 0.5 - _SANDWICH_TOL:
            # only possible for points numerically below the last level
            self.sandwich_violations += 1
            ratio = min(ratio, 1.0)
        self.proposals += 1
        self.ratio_sum += ratio
        return z, h, ratio

    def draw(self, rng):
        for _ in range(self.cfg.round_cap):
            z, _, ratio = self.propose(rng)
            if rng.random() < ratio:
                self.accepted += 1
                return z
        raise RetryExhausted(f"no acceptance in {self.cfg.round_cap} rounds")

    def draw_many(self, k, rng):
        return np.array([self.draw(rng) for _ in range(k)])


def sample_tent(X: SampleSet, y, cfg: SamplerConfig, rng, *, size=None,
                decomposition=None):
    """Draw from the tent density; one point, or ``size`` points as rows."""
    dec = decomposition or build_decomposition(X, y, cfg, rng)
    sampler = TentSampler(dec, cfg)
    if size is None:
        return sampler.draw(rng)
    return sampler.draw_many(size, rng)


@dataclass(frozen=True)
class LogPartitionEstimate:
    """``value`` estimates ``ln integral exp(h)``; ``rel_error`` bounds the
    relative error of ``exp(value)`` with probability ``1 - tau``."""

    value: float
    rel_error: float
    delta: float
    tau: float
    seed: Optional[int]
    trials: int
    acceptance: float


def alpha_trials(delta, tau):
    """Hoeffding count making a [0, 1] mean accurate to ``delta`` w.p. ``1 - tau``."""
    return int(ceil(log(2 / tau) / (2 * delta * delta)))


def estimate_log_partition(X: SampleSet, y, cfg: SamplerConfig, rng=None, *,
                           decomposition=None) -> LogPartitionEstimate:
    """Estimate ``A(y) = ln integral exp(h)`` as ``log M + ln c_tilde + ln alpha``.

    ``alpha`` is the mean acceptance probability of the rejection step,
    averaged over ``ceil(ln(2/tau) / (2 delta**2))`` proposals; by default
    the per-proposal probability ``exp(h)/G`` is averaged rather than the
    accept/reject coin, which has the same mean and smaller variance.
    """
    if not cfg.delta < 1 / 16:
        raise PreconditionError("log-partition estimation needs delta < 1/16")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    half = cfg.with_(tau=cfg.tau / 2)
    dec = decomposition or build_decomposition(X, y, half, rng)
    sampler = TentSampler(dec, cfg)
    N = alpha_trials(cfg.delta, cfg.tau / 2)
    hits = 0.0
    for _ in range(N):
        _, _, ratio = sampler.propose(rng)
        if cfg.alpha_estimator == "ratio":
            hits += ratio
        else:
            hits += float(rng.random() < ratio)
    alpha = hits / N
    if not alpha > 0:
        raise SamplerError("no accepted proposals while estimating the partition")
    value = dec.log_M + log(dec.c_tilde) + log(alpha)
    half_width = sqrt(log(4 / cfg.tau) / (2 * N))
    rel = (1 + dec.volume_rel_error) * (1 + half_width / alpha) / (1 - dec.tail_mass_bound) - 1
    return LogPartitionEstimate(value=value, rel_error=rel, delta=cfg.delta,
                                tau=cfg.tau, seed=cfg.seed, trials=N,
                                acceptance=alpha)
