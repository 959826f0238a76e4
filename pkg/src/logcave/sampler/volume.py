"""Volume estimation for convex bodies.

Two backends share one contract (relative error at most ``delta`` with
probability at least ``1 - tau``):

* ``grid`` refines axis-aligned cells until the certified lower bound
  (cells proven inside) and upper bound (inside plus undecided cells) are
  within a factor ``(1 + delta)**2``, then returns their geometric mean.
  It is deterministic and needs a separation oracle to prove cells outside.
* ``mc`` is the multiphase estimator: with ``B(c, r)`` inside the body and
  radii ``r 2**(j/d)``, each ratio ``vol(K_{j-1}) / vol(K_j)`` of the
  ball-clipped bodies lies in ``[1/2, 1]`` and is estimated along hit-and-run
  chords.

One-dimensional bodies are intervals and are measured exactly.
"""

from math import ceil, log, log2, sqrt
from statistics import NormalDist
from typing import NamedTuple

import numpy as np

from ..errors import VolumeFailure
from ..lp_core import ball_volume
from .bodies import TentLevelSet
from .walk import hit_and_run_chains, uniform_in_ball

__all__ = ["VolumeEstimate", "estimate_volume", "volume_with_error",
           "grid_volume", "multiphase_volume"]


class VolumeEstimate(NamedTuple):
    value: float
    rel_error: float
    backend: str


def estimate_volume(body, cfg, rng=None):
    """Volume of ``body`` within relative error ``cfg.delta`` (w.p. ``1 - cfg.tau``)."""
    return volume_with_error(body, cfg, rng).value


def volume_with_error(body, cfg, rng=None, *, delta=None, tau=None) -> VolumeEstimate:
    delta = cfg.delta if delta is None else delta
    tau = cfg.tau if tau is None else tau
    if body.d == 1:
        lo, hi = body.interval()
        if not hi > lo:
            raise VolumeFailure("interval has zero length")
        return VolumeEstimate(hi - lo, 0.0, "exact")
    if cfg.volume_backend == "grid":
        return grid_volume(body, delta, max_cells=cfg.max_grid_cells)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return multiphase_volume(body, delta, tau, rng, burn_in=cfg.burn_in_for(body.d),
                             chains=cfg.mc_chains, inflation=cfg.mc_inflation)


def grid_volume(body, delta, max_cells=2_000_000) -> VolumeEstimate:
    d = body.d
    if d > 3:
        raise VolumeFailure("grid backend supports d <= 3; use the mc backend")
    lo, hi = body.bounding_box()
    size = hi - lo
    if not np.all(size > 0):
        raise VolumeFailure("body has an empty interior")
    cache = body.cached_membership() if isinstance(body, TentLevelSet) else None
    children = np.array(np.meshgrid(*([[0.0, 0.5]] * d), indexing="ij")).reshape(d, -1).T
    cells = lo[None, :]
    inside = 0.0
    seen = 0
    target = (1 + delta) ** 2
    while True:
        seen += len(cells)
        if seen > max_cells:
            raise VolumeFailure(f"grid refinement exceeded {max_cells} cells")
        codes = body.classify_cells(cells, size, cache)
        cell_vol = float(np.prod(size))
        inside += cell_vol * int(np.sum(codes == 1))
        cells = cells[codes == 0]
        upper = inside + cell_vol * len(cells)
        if inside > 0 and upper <= target * inside:
            value = sqrt(inside * upper)
            return VolumeEstimate(value, sqrt(upper / inside) - 1.0, "grid")
        cells = (cells[:, None, :] + children[None, :, :] * size).reshape(-1, d)
        size = size / 2


def multiphase_volume(body, delta, tau, rng, *, burn_in=100, chains=64,
                      inflation=1.0) -> VolumeEstimate:
    d = body.d
    c, r = body.inner_ball()
    if not r > 0:
        raise VolumeFailure("body has no inscribed ball")
    R = body.radius_from(c)
    base = ball_volume(d, r)
    if R <= r:
        return VolumeEstimate(base, 0.0, "mc")
    J = max(1, ceil(d * log2(R / r)))
    radii = [min(r * 2 ** (j / d), R) for j in range(J + 1)]
    radii[-1] = R
    z = NormalDist().inv_cdf(1 - tau / 2)
    # Var(log estimate) <= J / N for independent draws; inflation absorbs
    # the autocorrelation of consecutive hit-and-run chords
    per_phase = ceil(inflation * z * z * J / log(1 + delta) ** 2)
    steps = max(1, ceil(per_phase / chains))
    X = uniform_in_ball(rng, chains, c, r)
    log_ratio = 0.0
    for j in range(1, J + 1):
        outer, inner = radii[j], radii[j - 1]
        X = hit_and_run_chains(body, X, burn_in, rng, clip=(c, outer))
        total = [0.0]

        def tally(P, U, tm, tp, inner=inner):
            W = P - c
            b = np.einsum("ij,ij->i", W, U)
            disc = b * b - (np.einsum("ij,ij->i", W, W) - inner * inner)
            s = np.sqrt(np.maximum(disc, 0.0))
            left = np.maximum(-tm, -b - s)
            right = np.minimum(tp, s - b)
            frac = np.where(disc > 0, np.maximum(right - left, 0.0), 0.0) / (tm + tp)
            total[0] += float(frac.sum())

        X = hit_and_run_chains(body, X, steps, rng, clip=(c, outer), on_step=tally)
        p = total[0] / (steps * chains)
        if not p > 0:
            raise VolumeFailure("phase ratio estimate collapsed to zero")
        log_ratio += log(p)
    value = base * np.exp(-log_ratio)
    return VolumeEstimate(float(value), float(np.expm1(z * sqrt(J / (steps * chains) * inflation))), "mc")
