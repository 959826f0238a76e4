"""Hit-and-run on convex bodies and uniform sampling built on it."""

import numpy as np

from ..errors import WalkStuck

__all__ = ["random_directions", "hit_and_run", "hit_and_run_chains", "uniform_sample",
           "uniform_in_ball"]

_STUCK_TOL = 1e-13


def random_directions(rng, k, d):
    U = rng.standard_normal((k, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def uniform_in_ball(rng, k, center, radius):
    d = len(center)
    U = random_directions(rng, k, d)
    r = radius * rng.random(k) ** (1.0 / d)
    return center + r[:, None] * U


def hit_and_run(body, x0, steps, rng):
    """Run ``steps`` hit-and-run moves from ``x0`` and return the final point.

    Each move draws a uniform direction and a uniform point on the chord
    through the current point.  Raises :class:`WalkStuck` when ``d + 1``
    consecutive directions give a degenerate chord.
    """
    x = np.array(x0, dtype=float)
    d = len(x)
    scale = 1.0 + float(np.abs(x).max())
    stuck = 0
    done = 0
    while done < steps:
        u = random_directions(rng, 1, d)[0]
        tm, tp = body.chord(x, u)
        if tm + tp <= _STUCK_TOL * scale:
            stuck += 1
            if stuck > d:
                raise WalkStuck("every proposed chord through the current point is degenerate")
            continue
        stuck = 0
        x = x + (rng.random() * (tm + tp) - tm) * u
        done += 1
    return x


def hit_and_run_chains(body, X0, steps, rng, clip=None, on_step=None):
    """Advance many chains in lock step; ``X0`` has one chain per row.

    ``clip`` is an optional ``(center, radius)`` ball intersected with the
    body.  ``on_step(X, U, tm, tp)`` is called with the chords used at each
    move before the chains jump.
    """
    X = np.array(X0, dtype=float)
    k, d = X.shape
    for _ in range(steps):
        U = random_directions(rng, k, d)
        if clip is None:
            tm, tp = body.chords(X, U)
        else:
            c, R = clip
            W = X - c
            b = np.einsum("ij,ij->i", W, U)
            disc = np.maximum(b * b - (np.einsum("ij,ij->i", W, W) - R * R), 0.0)
            s = np.sqrt(disc)
            bm, bp = np.maximum(b + s, 0.0), np.maximum(s - b, 0.0)
            tm, tp = body.chords(X, U, cap=(bm, bp))
            tm = np.minimum(tm, bm)
            tp = np.minimum(tp, bp)
        if np.all(tm + tp <= _STUCK_TOL):
            raise WalkStuck("all chains are pinned to degenerate chords")
        if on_step is not None:
            on_step(X, U, tm, tp)
        t = rng.random(k) * (tm + tp) - tm
        X = X + t[:, None] * U
    return X


def uniform_sample(body, cfg, rng):
    """One approximately uniform point of ``body``.

    Intervals are sampled exactly.  In higher dimension a fresh walk of
    ``cfg.walk_steps_for(d)`` moves starts at the body's inscribed-ball centre.
    """
    if body.d == 1:
        lo, hi = body.interval()
        if not hi > lo:
            raise WalkStuck("level set has zero length")
        return np.array([lo + (hi - lo) * rng.random()])
    c, r = body.inner_ball()
    if not r > 0:
        raise WalkStuck("level set has empty interior")
    return hit_and_run(body, c, cfg.walk_steps_for(body.d), rng)
