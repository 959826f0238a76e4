"""Projected stochastic subgradient ascent for the tent-density likelihood.

Starting from ``y = 0`` each step draws one point ``s`` from the current
tent density, moves along ``(1/n) 1 - T(s)`` with step ``c / sqrt(k)`` and
projects back onto ``{sum(y) = 0, ||y||_2 <= radius}``.  The returned
estimate is the uniform average of the iterates.
"""

import time
from dataclasses import dataclass, field
from math import ceil, log, sqrt
from typing import Optional

import numpy as np

from .errors import LogCaveError, NonFiniteObjective, PreconditionError
from .lp_core import SampleSet, heights_of
from .sampler import (SamplerConfig, TentSampler, build_decomposition,
                      estimate_log_partition, hull_body, volume_with_error)
from .tent_model import TentParams, objective_value, pole_values

__all__ = ["diameter_bound", "step_constant", "theory_iterations", "project_feasible",
           "SolverConfig", "FitReport", "fit", "certify"]

_FEASIBLE_TOL = 1e-9


def diameter_bound(n, d):
    """``2 n**2 d ln(2 n d)``, a bound on the diameter of the feasible set.

    >>> round(diameter_bound(2, 1), 2)
    11.09
    """
    if not (n >= d + 1 and d >= 1):
        raise PreconditionError("need n >= d + 1 >= 2")
    return 2.0 * n * n * d * log(2.0 * n * d)


def step_constant(n, d):
    """``c = 8 n**2 d ln(2 n d)``: step scale and default projection radius."""
    return 4.0 * diameter_bound(n, d)


def theory_iterations(n, d, epsilon):
    return int(ceil(2 * step_constant(n, d) ** 2 / epsilon ** 2))


def project_feasible(y, radius) -> TentParams:
    """Euclidean projection onto ``{sum(y) = 0, ||y||_2 <= radius}``.

    >>> project_feasible([3.0, -3.0], 1.0).y.round(4)
    array([ 0.7071, -0.7071])
    """
    v = np.asarray(heights_of(y), dtype=float).copy()
    if not np.all(np.isfinite(v)):
        raise NonFiniteObjective("iterate is not finite")
    if not radius > 0:
        raise PreconditionError("radius must be positive")
    v -= v.mean()
    norm = float(np.linalg.norm(v))
    if norm > radius:
        v *= radius / norm
        v -= v.mean()
    return TentParams(v)


def _is_feasible(y, radius):
    return (abs(float(y.sum())) <= _FEASIBLE_TOL * max(1.0, float(np.abs(y).sum()))
            and float(np.linalg.norm(y)) <= radius * (1 + 1e-12))


@dataclass(frozen=True)
class SolverConfig:
    """Settings for :func:`fit`.

    Parameters
    ----------
    epsilon, tau : float
        Target log-likelihood gap and failure probability.
    max_iters : int or None
        Cap on the iteration count ``2 c**2 / epsilon**2``.
    step_scale : float
        Multiplier on the step ``c / sqrt(k)``.
    sampler : SamplerConfig or None
        Sampler settings; by default ``delta = epsilon / (2 diam)``.
    projection_radius : float or None
        Radius of the feasible ball; defaults to ``c``.
    trace_points : int
        Checkpoints at which the running average is scored (0 disables).
    trace_delta, report_delta, certify_delta : float
        Partition-estimate accuracies for the trace, the final report and
        :func:`certify`.
    schedule : {"fixed", "coarse-to-fine"}
        Sampler accuracy schedule.  ``coarse-to-fine`` starts at
        ``min(0.05, 64 delta)`` and halves toward ``delta`` as ``k`` grows.
    keep_iterates : bool
        Store every iterate in the report.
    """

    epsilon: float = 0.1
    tau: float = 0.05
    max_iters: Optional[int] = None
    step_scale: float = 1.0
    sampler: Optional[SamplerConfig] = None
    projection_radius: Optional[float] = None
    seed: Optional[int] = None
    trace_points: int = 20
    trace_delta: float = 0.05
    report_delta: float = 0.01
    certify_delta: float = 0.005
    schedule: str = "fixed"
    keep_iterates: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise PreconditionError("epsilon must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise PreconditionError("tau must lie in (0, 1)")
        if self.max_iters is not None and self.max_iters < 1:
            raise PreconditionError("max_iters must be at least 1")
        if not self.step_scale > 0:
            raise PreconditionError("step_scale must be positive")
        if self.projection_radius is not None and not self.projection_radius > 0:
            raise PreconditionError("projection_radius must be positive")
        for name in ("trace_delta", "report_delta", "certify_delta"):
            if not 0 < getattr(self, name) < 1 / 16:
                raise PreconditionError(f"{name} must lie in (0, 1/16)")
        if self.schedule not in ("fixed", "coarse-to-fine"):
            raise PreconditionError("schedule must be 'fixed' or 'coarse-to-fine'")
        if self.trace_points < 0:
            raise PreconditionError("trace_points must be non-negative")

    def radius_for(self, n, d):
        return self.projection_radius or step_constant(n, d)

    def sampler_for(self, n, d):
        if self.sampler is not None:
            return self.sampler
        return SamplerConfig(delta=self.epsilon / (2 * diameter_bound(n, d)),
                             tau=self.tau, seed=self.seed)

    def iterations_for(self, n, d):
        full = theory_iterations(n, d, self.epsilon)
        return full if self.max_iters is None else min(full, self.max_iters)


@dataclass
class FitReport:
    """Outcome of :func:`fit`; ``y_final`` is the averaged iterate."""

    y_final: TentParams
    loglik: float
    log_partition: float
    surrogate_trace: list
    iterations: int
    seed: int
    diagnostics: dict
    iterates: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self):
        return {
            "y": self.y_final.y.tolist(),
            "loglik": self.loglik,
            "logPartition": self.log_partition,
            "iterations": self.iterations,
            "seed": self.seed,
            "diagnostics": self.diagnostics,
        }


class FitAborted(LogCaveError):
    """A sampler failure stopped :func:`fit`; ``partial`` holds the report so far."""

    def __init__(self, cause, partial):
        super().__init__(f"fit aborted after {partial.iterations} iterations: {cause}")
        self.cause = cause
        self.partial = partial


def _streams(seed):
    ss = np.random.SeedSequence(seed)
    walk, trace, final = ss.spawn(3)
    return (int(ss.entropy), np.random.default_rng(walk), np.random.default_rng(trace),
            np.random.default_rng(final))


def _schedule_delta(cfg, base, k):
    if cfg.schedule == "fixed":
        return base
    coarse = min(0.05, 64 * base)
    return max(base, coarse / 2 ** int(log(k, 4)) if k > 1 else coarse)


def fit(X: SampleSet, cfg: SolverConfig = SolverConfig(), rng=None) -> FitReport:
    """Approximate maximum-likelihood tent heights for the sample ``X``.

    ``rng`` may be a seed; by default ``cfg.seed`` is used.  Identical seeds
    and configurations give identical reports (apart from timing).
    """
    n, d = X.n, X.d
    seed, walk_rng, trace_rng, final_rng = _streams(cfg.seed if rng is None else rng)
    c = step_constant(n, d)
    radius = cfg.radius_for(n, d)
    K = cfg.iterations_for(n, d)
    base = cfg.sampler_for(n, d)
    hull_volume = volume_with_error(hull_body(X), base, walk_rng).value
    y = np.zeros(n)
    total = np.zeros(n)
    iterates = np.empty((K, n)) if cfg.keep_iterates else None
    checkpoints = set()
    if cfg.trace_points:
        checkpoints = {max(1, round(K * (j + 1) / cfg.trace_points)) for j in range(cfg.trace_points)}
    trace = []
    stats = {"proposals": 0, "accepted": 0, "projection_hits": 0, "levels": 0,
             "truncated": 0, "sandwich_violations": 0, "boundary_statistics": 0,
             "max_subgradient_norm": 0.0}
    started = time.perf_counter()

    def report(k, ybar):
        diag = {
            "acceptanceRate": stats["accepted"] / stats["proposals"] if stats["proposals"] else None,
            "proposals": stats["proposals"],
            "projectionHits": stats["projection_hits"],
            "meanLevels": stats["levels"] / k if k else None,
            "truncatedDecompositions": stats["truncated"],
            "sandwichViolations": stats["sandwich_violations"],
            "boundaryStatistics": stats["boundary_statistics"],
            "maxSubgradientNorm": stats["max_subgradient_norm"],
            "samplerDelta": base.delta,
            "volumeBackend": base.volume_backend,
            "walkSteps": base.walk_steps_for(d),
            "stepConstant": c,
            "projectionRadius": radius,
            "stepScale": cfg.step_scale,
            "theoryIterations": theory_iterations(n, d, cfg.epsilon),
            "hullVolume": hull_volume,
        }
        return FitReport(y_final=ybar, loglik=float("nan"), log_partition=float("nan"),
                         surrogate_trace=trace, iterations=k, seed=seed, diagnostics=diag,
                         iterates=None if iterates is None else iterates[:k])

    for k in range(1, K + 1):
        scfg = base.with_(delta=_schedule_delta(cfg, base.delta, k))
        try:
            dec = build_decomposition(X, y, scfg, walk_rng, hull_volume=hull_volume)
            sampler = TentSampler(dec, scfg)
            s = sampler.draw(walk_rng)
        except LogCaveError as exc:
            partial = report(k - 1, project_feasible(total / max(k - 1, 1), radius))
            raise FitAborted(exc, partial) from exc
        stat = sampler.lp.statistic(s)
        g = 1.0 / n - stat.weights
        gnorm = float(np.linalg.norm(g))
        if not np.isfinite(gnorm) or gnorm > 2.0:
            raise NonFiniteObjective(f"subgradient norm {gnorm} violates the simplex bound")
        step = cfg.step_scale * c / sqrt(k)
        raw = y + step * g
        if float(np.linalg.norm(raw - raw.mean())) > radius:
            stats["projection_hits"] += 1
        y = project_feasible(raw, radius).y.copy()
        if not _is_feasible(y, radius):
            raise NonFiniteObjective("projected iterate left the feasible set")
        total += y
        if iterates is not None:
            iterates[k - 1] = y
        stats["proposals"] += sampler.proposals
        stats["accepted"] += sampler.accepted
        stats["levels"] += dec.levels
        stats["truncated"] += int(dec.truncated)
        stats["sandwich_violations"] += sampler.sandwich_violations
        stats["boundary_statistics"] += int(stat.boundary)
        stats["max_subgradient_norm"] = max(stats["max_subgradient_norm"], gnorm)
        if k in checkpoints:
            ybar = project_feasible(total / k, radius)
            tcfg = SamplerConfig(delta=cfg.trace_delta, tau=cfg.tau, walk_steps=base.walk_steps,
                                 volume_backend=base.volume_backend)
            est = estimate_log_partition(X, ybar, tcfg, trace_rng)
            obj = objective_value(X, ybar, est)
            trace.append((k, obj.surrogate, obj.loglik))

    ybar = project_feasible(total / K, radius)
    out = report(K, ybar)
    fcfg = SamplerConfig(delta=cfg.report_delta, tau=cfg.tau, walk_steps=base.walk_steps,
                         volume_backend=base.volume_backend)
    est = estimate_log_partition(X, ybar, fcfg, final_rng)
    out.log_partition = est.value
    out.loglik = objective_value(X, ybar, est).loglik
    out.diagnostics["logPartitionRelError"] = est.rel_error
    out.diagnostics["wallClockSeconds"] = time.perf_counter() - started
    return out


def certify(X: SampleSet, y_candidate, cfg: SolverConfig = SolverConfig(), rng=None):
    """Log-likelihood of ``y_candidate`` with an accurate partition estimate.

    ``y_candidate`` must lie in the feasible set of ``cfg``.
    """
    y = heights_of(y_candidate)
    if y.shape != (X.n,) or not np.all(np.isfinite(y)):
        raise PreconditionError("candidate must be a finite vector with one height per point")
    radius = cfg.radius_for(X.n, X.d)
    if not _is_feasible(y, radius):
        raise PreconditionError("candidate is outside the feasible set")
    base = cfg.sampler_for(X.n, X.d)
    ccfg = SamplerConfig(delta=cfg.certify_delta, tau=cfg.tau, walk_steps=base.walk_steps,
                         volume_backend=base.volume_backend)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(4)[3])
    est = estimate_log_partition(X, y, ccfg, rng)
    return float(pole_values(X, y).sum() - X.n * est.value)
