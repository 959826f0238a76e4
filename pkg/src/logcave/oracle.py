"""Independent ground truth for small instances.

Nothing here calls the stochastic machinery.  One-dimensional tents are
rebuilt from scratch as upper concave envelopes (no LP), so they
cross-check :mod:`logcave.lp_core`.  Two-dimensional partition functions integrate
over the linear pieces of the lifted upper hull, with certified adaptive
quadrature as a pointwise cross-check.
"""

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import expm
from scipy.spatial import ConvexHull
from scipy.special import logsumexp

from .errors import (DegenerateSupport, NeighborhoodCrossing, PreconditionError,
                     ToleranceNotMet)
from .lp_core import OUTSIDE_HULL, SampleSet, TentLP, heights_of

__all__ = ["PiecewiseLinearLogDensity1D", "upper_envelope_1d", "exact_partition_1d",
           "exact_partition_2d", "triangle_exp_integral", "brute_force_mle",
           "batch_loglik_1d", "finite_difference_gradA", "hellinger_check",
           "tent_cdf_1d", "tent_inverse_cdf_1d"]


def _coords_1d(X):
    if isinstance(X, SampleSet):
        if X.d != 1:
            raise PreconditionError("one-dimensional sample required")
        return X.points[0].copy()
    x = np.asarray(X, dtype=float)
    if x.ndim == 2 and 1 in x.shape:
        x = x.reshape(-1)
    if x.ndim != 1:
        raise PreconditionError("one-dimensional sample required")
    return x


@dataclass(frozen=True)
class PiecewiseLinearLogDensity1D:
    """Upper concave envelope of ``(x_i, y_i)``: breakpoints and their heights."""

    knots: np.ndarray
    values: np.ndarray
    indices: tuple

    @property
    def support(self):
        return float(self.knots[0]), float(self.knots[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.knots, self.values)
        lo, hi = self.support
        return np.where((t < lo) | (t > hi), -np.inf, out)

    def segment_log_integrals(self):
        a, b = self.values[:-1], self.values[1:]
        return _log_segment(np.diff(self.knots), a, b)

    def log_partition(self):
        if len(self.knots) == 1:
            raise DegenerateSupport("all sample points coincide")
        return float(logsumexp(self.segment_log_integrals()))


def _log_segment(length, a, b):
    """``log integral`` of ``exp`` of the line from ``a`` to ``b`` over ``length``."""
    gap = np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(gap > 0, -np.expm1(-gap) / gap, 1.0)
    return np.log(length) + np.maximum(a, b) + np.log(phi)


def upper_envelope_1d(X, y) -> PiecewiseLinearLogDensity1D:
    """Monotone-chain upper hull of the lifted points, strict vertices only."""
    x = _coords_1d(X)
    yv = heights_of(y)
    if x.shape != yv.shape:
        raise PreconditionError("X and y must have equal length")
    order = np.lexsort((-yv, x))
    hull = []
    last_x = None
    for i in order:
        if last_x is not None and x[i] == last_x:
            continue  # equal abscissa: the highest was taken first
        last_x = x[i]
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            cross = (x[k] - x[j]) * (yv[i] - yv[j]) - (yv[k] - yv[j]) * (x[i] - x[j])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(int(i))
    return PiecewiseLinearLogDensity1D(x[hull], yv[hull], tuple(hull))


def exact_partition_1d(X, y):
    """``ln integral exp(h)`` for a one-dimensional tent, in closed form.

    >>> round(exact_partition_1d([0.0, 1.0], [1.0, -1.0]), 6)
    0.161439
    """
    env = upper_envelope_1d(X, y)
    if len(env.knots) < 2:
        raise DegenerateSupport("all sample points coincide")
    return env.log_partition()


def tent_cdf_1d(X, y, t):
    """CDF of the normalized one-dimensional tent density."""
    env = upper_envelope_1d(X, y)
    logs = env.segment_log_integrals()
    A = logsumexp(logs)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    cum = np.concatenate([[0.0], np.cumsum(np.exp(logs - A))])
    for k, tk in enumerate(t):
        if tk <= env.knots[0]:
            out[k] = 0.0
            continue
        if tk >= env.knots[-1]:
            out[k] = 1.0
            continue
        s = int(np.searchsorted(env.knots, tk, side="right")) - 1
        a, b = env.values[s], env.values[s + 1]
        x0 = env.knots[s]
        L = env.knots[s + 1] - x0
        part = _log_segment(tk - x0, a, a + (b - a) * (tk - x0) / L)
        out[k] = cum[s] + np.exp(part - A)
    return out


def tent_inverse_cdf_1d(X, y, u):
    """Quantile function of the normalized one-dimensional tent density."""
    env = upper_envelope_1d(X, y)
    logs = env.segment_log_integrals()
    A = logsumexp(logs)
    cum = np.concatenate([[0.0], np.cumsum(np.exp(logs - A))])
    u = np.atleast_1d(np.asarray(u, dtype=float))
    s = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(logs) - 1)
    x0 = env.knots[s]
    L = env.knots[s + 1] - x0
    a = env.values[s]
    slope = (env.values[s + 1] - a) / L
    # mass from x0 to x0 + t is exp(a - A) (exp(slope t) - 1) / slope
    r = (u - cum[s]) * np.exp(A - a)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(slope) > 1e-12, np.log1p(slope * r) / slope, r)
    return np.clip(x0 + t, x0, x0 + L)


def triangle_exp_integral(V, f):
    """Exact ``integral of exp(L)`` over a triangle, ``L`` linear with vertex values ``f``.

    Uses the identity ``integral = 2 area * exp[f1, f2, f3]`` (second divided
    difference of exp), read off the exponential of a bidiagonal matrix.
    """
    V = np.asarray(V, dtype=float)
    area = 0.5 * abs((V[1, 0] - V[0, 0]) * (V[2, 1] - V[0, 1])
                     - (V[2, 0] - V[0, 0]) * (V[1, 1] - V[0, 1]))
    f = np.asarray(f, dtype=float)
    top = float(f.max())
    Z = np.diag(f - top) + np.diag([1.0, 1.0], 1)
    return 2.0 * area * float(expm(Z)[0, 2]) * np.exp(top)


def _hull_fan(P):
    hull = ConvexHull(P)
    ring = hull.vertices
    return [P[[ring[0], ring[k], ring[k + 1]]] for k in range(1, len(ring) - 1)]


def _upper_facets(P, y):
    """Triangles of the regular subdivision induced by lifting ``P`` to ``y``.

    A sentinel point well below the centroid makes the lifted set
    full-dimensional even when all heights are coplanar; the facets not
    touching it with upward normals are the graph of ``h``.
    """
    n = P.shape[0]
    depth = float(y.max() - y.min()) + 1.0
    lifted = np.vstack([np.column_stack([P, y]),
                        np.append(P.mean(axis=0), y.min() - depth)])
    hull = ConvexHull(lifted)
    tris = []
    for simplex, eq in zip(hull.simplices, hull.equations):
        if n in simplex or eq[2] <= 0:
            continue
        tris.append(simplex)
    return tris


def exact_partition_2d(X, y, tol=1e-8, max_triangles=400_000, method="facets"):
    """``ln integral exp(h)`` for a two-dimensional tent.

    ``method="facets"`` (default) integrates ``exp`` exactly over each
    linear piece of ``h``, read off the upper hull of the lifted points.
    ``method="quadrature"`` instead uses certified adaptive quadrature that
    only evaluates ``h`` pointwise through the LP: each triangle carries
    bounds ``[I_L, I_L exp(3 g)]`` where ``I_L`` is the exact integral of
    the vertex interpolant ``L <= h`` and ``g`` is ``h - L`` at the centroid
    (a non-negative concave function on a triangle is at least a third of
    its maximum there).  The widest triangles are split into four until the
    bounds agree to relative ``tol``.
    """
    if not isinstance(X, SampleSet):
        X = SampleSet(np.asarray(X, dtype=float))
    if X.d != 2:
        raise PreconditionError("two-dimensional sample required")
    yv = heights_of(y)
    if X.n == 3:
        return float(np.log(triangle_exp_integral(X.points.T, yv)))
    if method == "facets":
        P = X.points.T
        logs = [np.log(triangle_exp_integral(P[t], yv[t] - yv.max())) for t in _upper_facets(P, yv)]
        return float(yv.max() + logsumexp(logs))
    if method != "quadrature":
        raise PreconditionError(f"unknown method {method!r}")
    lp = TentLP(X, yv)
    memo = {}

    def h(p):
        key = p.tobytes()
        if key not in memo:
            v = lp.value(p)
            memo[key] = float(yv.min()) if v is OUTSIDE_HULL else v
        return memo[key]

    def bounds(T):
        f = np.array([h(T[0]), h(T[1]), h(T[2])])
        g = max(0.0, h(T.mean(axis=0)) - f.mean())
        lo = triangle_exp_integral(T, f)
        return lo, lo * np.exp(3 * g)

    heap = []
    lower = upper = 0.0
    count = 0
    for T in _hull_fan(X.points.T):
        lo, hi = bounds(T)
        lower += lo
        upper += hi
        heapq.heappush(heap, (-(hi - lo), count, T, lo, hi))
        count += 1
    while upper - lower > tol * lower:
        if count > max_triangles:
            raise ToleranceNotMet(
                f"relative gap {(upper - lower) / lower:.2e} after {count} triangles")
        _, _, T, lo, hi = heapq.heappop(heap)
        lower -= lo
        upper -= hi
        a, b, c = T
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        for S in (np.array([a, ab, ca]), np.array([ab, b, bc]),
                  np.array([ca, bc, c]), np.array([ab, bc, ca])):
            slo, shi = bounds(S)
            lower += slo
            upper += shi
            heapq.heappush(heap, (-(shi - slo), count, S, slo, shi))
            count += 1
    return float(np.log(0.5 * (lower + upper)))


def batch_loglik_1d(X, Y):
    """Log-likelihoods ``sum h(X_i) - n A(y)`` for each row of ``Y``.

    Vectorized over rows: ``h(X_i)`` is the best chord through any pair of
    poles bracketing ``X_i``, and ``h`` is linear between neighbours.
    """
    x = _coords_1d(X)
    order = np.argsort(x)
    x = x[order]
    Y = np.asarray(Y, dtype=float)[:, order]
    n = len(x)
    H = Y.copy()
    for i in range(1, n - 1):
        for j in range(i):
            for k in range(i + 1, n):
                w = (x[i] - x[j]) / (x[k] - x[j])
                np.maximum(H[:, i], (1 - w) * Y[:, j] + w * Y[:, k], out=H[:, i])
    logs = _log_segment(np.diff(x)[None, :], H[:, :-1], H[:, 1:])
    A = logsumexp(logs, axis=1)
    return H.sum(axis=1) - n * A


def _grid_candidates(n, radius, step):
    k = int(np.floor(radius / step + 1e-9))
    axis = np.arange(-k, k + 1) * step
    return axis, k


def brute_force_mle(X, grid_radius=5.0, grid_step=0.05, chunk=1_000_000):
    """Exhaustive search over the mean-zero grid ``{||y||_inf <= r, step s}``.

    Returns ``(y_star, loglik_star)``.  Supported for ``d <= 2`` and ``n <= 5``.
    """
    if not isinstance(X, SampleSet):
        X = SampleSet(np.asarray(X, dtype=float))
    n, d = X.n, X.d
    if d > 2 or n > 5:
        raise PreconditionError("brute force is limited to d <= 2 and n <= 5")
    axis, k = _grid_candidates(n, grid_radius, grid_step)
    m = len(axis)
    total = m ** (n - 1)
    best_val, best_y = -np.inf, None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        digits = np.empty((len(idx), n - 1), dtype=np.int64)
        rem = idx.copy()
        for c in range(n - 2, -1, -1):
            digits[:, c] = rem % m
            rem //= m
        free = digits - k
        last = -free.sum(axis=1)
        keep = np.abs(last) <= k
        Yi = np.hstack([free[keep], last[keep, None]])
        if not len(Yi):
            continue
        Y = Yi * grid_step
        if d == 1:
            scores = batch_loglik_1d(X, Y)
        else:
            scores = np.array([_loglik_2d(X, yrow) for yrow in Y])
        j = int(np.argmax(scores))
        if scores[j] > best_val:
            best_val, best_y = float(scores[j]), Y[j].copy()
    return best_y, best_val


def _loglik_2d(X, y, tol=1e-7):
    lp = TentLP(X, y)
    h = sum(lp.value(X.points[:, i]) for i in range(X.n))
    return h - X.n * exact_partition_2d(X, y, tol=tol)


def finite_difference_gradA(X, y, h=1e-5, project=True):
    """Central differences of the exact log-partition in each height.

    The gradient equals the mean polyhedral statistic; ``project`` removes
    its mean so it can be compared with ``E[T] - 1/n``.  Raises
    :class:`NeighborhoodCrossing` when a step changes the envelope vertices.
    """
    x = _coords_1d(X)
    yv = heights_of(y).copy()
    base = upper_envelope_1d(x, yv).indices
    g = np.empty(len(yv))
    for i in range(len(yv)):
        e = np.zeros(len(yv))
        e[i] = h
        for shifted in (yv + e, yv - e):
            if upper_envelope_1d(x, shifted).indices != base:
                raise NeighborhoodCrossing(f"step in height {i} changes the envelope")
        g[i] = (exact_partition_1d(x, yv + e) - exact_partition_1d(x, yv - e)) / (2 * h)
    return g - g.mean() if project else g


def hellinger_check(f0, fitted, tol=1e-8, *, support=None, log_partition=None,
                    delta=0.01, tau=0.05, rng=None):
    """Squared Hellinger distance ``1/2 integral (sqrt f0 - sqrt f)**2``.

    ``f0`` is a callable density; ``support`` is an interval (d = 1) or box
    (d = 2) containing both supports.  ``fitted`` is a tent density whose
    normalizer is estimated once unless ``log_partition`` is given.
    """
    from .tent_model import TentDensity
    if not isinstance(fitted, TentDensity):
        raise PreconditionError("fitted must be a TentDensity")
    X = fitted.samples
    if X.d > 2:
        raise PreconditionError("Hellinger harness supports d <= 2")
    if log_partition is None:
        if fitted.log_partition is not None:
            log_partition = fitted.log_partition.value
        elif X.d == 1:
            log_partition = exact_partition_1d(X, fitted.params)
        else:
            from .sampler import SamplerConfig, estimate_log_partition
            log_partition = estimate_log_partition(
                X, fitted.params, SamplerConfig(delta=delta, tau=tau), rng).value
    lp = TentLP(X, fitted.params)

    def f(*pt):
        v = lp.value(np.array(pt, dtype=float))
        return 0.0 if v is OUTSIDE_HULL else float(np.exp(v - log_partition))

    def integrand(*pt):
        return 0.5 * (np.sqrt(max(float(f0(*pt)), 0.0)) - np.sqrt(f(*pt))) ** 2

    lo, hi = X.bounding_box
    if support is not None:
        s = np.asarray(support, dtype=float).reshape(2, -1) if X.d == 2 else np.asarray(support, float)
        if X.d == 1:
            lo = np.minimum(lo, s[0])
            hi = np.maximum(hi, s[1])
        else:
            lo = np.minimum(lo, s[0])
            hi = np.maximum(hi, s[1])
    if X.d == 1:
        breaks = sorted(set(X.points[0].tolist()) | {float(lo[0]), float(hi[0])})
        if support is not None:
            breaks = sorted(set(breaks) | set(np.asarray(support, float).tolist()))
        total = 0.0
        for a, b in zip(breaks[:-1], breaks[1:]):
            val, _ = integrate.quad(integrand, a, b, epsabs=tol, epsrel=tol, limit=200)
            total += val
        return total
    val, _ = integrate.dblquad(lambda t, s: integrand(s, t), lo[0], hi[0], lo[1], hi[1],
                               epsabs=tol, epsrel=tol)
    return val
