from dataclasses import dataclass, replace
from math import ceil, log
from typing import Optional

from ..errors import PreconditionError

__all__ = ["SamplerConfig", "BACKENDS"]

BACKENDS = ("grid", "mc")
_ALIASES = {"montecarlo": "mc", "monte-carlo": "mc"}


@dataclass(frozen=True)
class SamplerConfig:
    """Accuracy and resource knobs for sampling and volume estimation.

    Parameters
    ----------
    delta : float
        Target total-variation / relative-volume accuracy, in (0, 1).
    tau : float
        Failure probability, in (0, 1).
    seed : int or None
        Seed recorded alongside results; generators are passed explicitly.
    walk_steps : int or None
        Hit-and-run moves per emitted point.  ``None`` means one move in
        d = 1 (a single exact chord move is exactly uniform there) and
        ``100 d**2`` otherwise.
    volume_backend : {"grid", "mc"}
        ``grid`` counts cells with certified bounds (d <= 3); ``mc`` runs a
        multiphase hit-and-run estimator.
    max_rounds : int or None
        Rejection rounds before :class:`RetryExhausted`; default ``64 ln(1/tau)``.
    alpha_estimator : {"ratio", "bernoulli"}
        How acceptance probability is averaged when estimating the partition.
    mc_chains, mc_burn_in, mc_inflation
        Parallel chains, moves between phases (default ``25 d``) and the
        sample-size multiplier covering chord autocorrelation for ``mc``.
    """

    delta: float = 0.01
    tau: float = 0.05
    seed: Optional[int] = None
    walk_steps: Optional[int] = None
    volume_backend: str = "grid"
    max_rounds: Optional[int] = None
    alpha_estimator: str = "ratio"
    mc_chains: int = 64
    mc_burn_in: Optional[int] = None
    mc_inflation: float = 1.0
    max_grid_cells: int = 2_000_000

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise PreconditionError("delta must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise PreconditionError("tau must lie in (0, 1)")
        if self.walk_steps is not None and self.walk_steps < 1:
            raise PreconditionError("walk_steps must be at least 1")
        backend = _ALIASES.get(self.volume_backend, self.volume_backend)
        if backend not in BACKENDS:
            raise PreconditionError(f"unknown volume backend {self.volume_backend!r}")
        object.__setattr__(self, "volume_backend", backend)
        if self.alpha_estimator not in ("ratio", "bernoulli"):
            raise PreconditionError("alpha_estimator must be 'ratio' or 'bernoulli'")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise PreconditionError("max_rounds must be at least 1")
        if self.mc_burn_in is not None and self.mc_burn_in < 0:
            raise PreconditionError("mc_burn_in must be non-negative")
        if self.mc_chains < 1 or self.mc_inflation <= 0:
            raise PreconditionError("mc_chains and mc_inflation must be positive")

    def walk_steps_for(self, d):
        if self.walk_steps is not None:
            return self.walk_steps
        return 1 if d == 1 else 100 * d * d

    def burn_in_for(self, d):
        return self.mc_burn_in if self.mc_burn_in is not None else 25 * d

    @property
    def round_cap(self):
        if self.max_rounds is not None:
            return self.max_rounds
        return max(1, ceil(64 * log(1 / self.tau)))

    def with_(self, **changes):
        return replace(self, **changes)
