"""Convex bodies the walk and volume routines operate on.

Every body exposes the same small surface: membership, the chord through a
point along a direction, a separation oracle (where available), a bounding
box, and an inscribed ball used as a starting point.
"""

from functools import cached_property
from itertools import product
import numpy as np

from ..errors import PreconditionError, VolumeFailure
from ..lp_core import (INFEASIBLE, INSIDE, OUTSIDE_HULL, Hyperplane, LpProblem,
                       SampleSet, TentLP, heights_of, hull_separator,
                       separation_oracle, simplex_standard, solve_lp)

__all__ = ["ConvexBody", "MembershipBody", "PolytopeBody", "TentLevelSet",
           "hull_body", "unit_cube", "standard_simplex"]


def _corner_offsets(d):
    return np.array(list(product((0.0, 1.0), repeat=d)))


def _ball_chord(x, u, center, radius):
    """Parameters ``(t_minus, t_plus)`` with ``x + t u`` in the ball, u unit."""
    w = x - center
    b = float(w @ u)
    disc = b * b - (float(w @ w) - radius * radius)
    if disc <= 0.0:
        return 0.0, 0.0
    s = disc ** 0.5
    return max(0.0, b + s), max(0.0, s - b)


class ConvexBody:
    """Base class; subclasses override :meth:`contains` and usually :meth:`chord`."""

    d: int

    def contains(self, x):
        raise NotImplementedError

    def contains_many(self, P):
        return np.array([self.contains(p) for p in P], dtype=bool)

    def separate(self, x):
        """:data:`INSIDE`, a :class:`Hyperplane`, or None when unsupported."""
        return None

    def inner_ball(self):
        raise NotImplementedError

    def outer_ball(self):
        raise NotImplementedError

    def bounding_box(self):
        c, R = self.outer_ball()
        return c - R, c + R

    def radius_from(self, center):
        """Radius of a ball around ``center`` containing the body."""
        c, R = self.outer_ball()
        return R + float(np.linalg.norm(np.asarray(center) - c))

    def chord(self, x, u):
        """Largest ``(t_minus, t_plus)`` with ``x + t u`` inside for ``t`` in ``[-t_minus, t_plus]``."""
        c, R = self.outer_ball()
        return (self._bisect(x, -u, 2 * R + np.linalg.norm(x - c)),
                self._bisect(x, u, 2 * R + np.linalg.norm(x - c)))

    def chords(self, P, U, cap=None):
        """Chords for many chains at once; ``cap`` optionally bounds both ends."""
        out = np.array([self.chord(p, u) for p, u in zip(P, U)])
        return out[:, 0], out[:, 1]

    def _bisect(self, x, u, hi, iters=50):
        lo = 0.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if self.contains(x + mid * u):
                lo = mid
            else:
                hi = mid
        return lo

    def interval(self):
        """Exact extent of a one-dimensional body."""
        if self.d != 1:
            raise PreconditionError("interval() is only defined for d = 1")
        c, _ = self.inner_ball()
        tm, tp = self.chord(c, np.ones(1))
        return float(c[0] - tm), float(c[0] + tp)

    def classify_cells(self, lows, size, cache=None):
        """Label axis-aligned cells +1 (inside), -1 (outside) or 0 (undecided).

        A cell is inside when all corners are (convexity); it is outside
        when a separating hyperplane at its centre puts every corner on the
        excluded side.  Bodies without separation never certify outside.
        """
        offs = _corner_offsets(self.d) * size
        codes = np.zeros(len(lows), dtype=np.int8)
        for k, lo in enumerate(lows):
            corners = lo + offs
            if cache is None:
                inside = self.contains_many(corners)
            else:
                inside = np.array([cache(self, p) for p in corners], dtype=bool)
            if inside.all():
                codes[k] = 1
                continue
            sep = self.separate(lo + 0.5 * size)
            if isinstance(sep, Hyperplane) and np.all(corners @ sep.normal > sep.offset):
                codes[k] = -1
        return codes


class MembershipBody(ConvexBody):
    """A convex body known only through a membership predicate.

    ``contains`` receives a single point, or an ``(k, d)`` array when
    ``vectorized`` is set.  Chords are found by bisection inside the outer ball.
    """

    def __init__(self, contains, d, inner_ball, outer_ball, *, vectorized=False,
                 separate=None):
        self._contains = contains
        self.d = int(d)
        self._inner = (np.asarray(inner_ball[0], float), float(inner_ball[1]))
        self._outer = (np.asarray(outer_ball[0], float), float(outer_ball[1]))
        self._vectorized = vectorized
        self._separate = separate

    def contains(self, x):
        x = np.asarray(x, float)
        if self._vectorized:
            return bool(self._contains(x[None, :])[0])
        return bool(self._contains(x))

    def contains_many(self, P):
        P = np.asarray(P, float)
        if self._vectorized:
            return np.asarray(self._contains(P), dtype=bool)
        return super().contains_many(P)

    def separate(self, x):
        return None if self._separate is None else self._separate(np.asarray(x, float))

    def inner_ball(self):
        return self._inner

    def outer_ball(self):
        return self._outer

    def chords(self, P, U, cap=None):
        if not self._vectorized:
            return super().chords(P, U, cap)
        if cap is None:
            c, R = self._outer
            span = 2 * R + np.linalg.norm(P - c, axis=1)
            cap = (span, span)
        return self._bisect_many(P, -U, cap[0]), self._bisect_many(P, U, cap[1])

    def _bisect_many(self, P, U, hi, iters=40):
        # an endpoint that is already inside ends the search immediately
        hi = np.asarray(hi, float).copy()
        full = self.contains_many(P + hi[:, None] * U)
        lo = np.where(full, hi, 0.0)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            ok = self.contains_many(P + mid[:, None] * U)
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        return lo


class PolytopeBody(ConvexBody):
    """``{x : A x <= b}``, bounded and full-dimensional."""

    def __init__(self, A, b):
        self.A = np.atleast_2d(np.asarray(A, float))
        self.b = np.asarray(b, float).reshape(-1)
        if self.A.shape[0] != self.b.shape[0]:
            raise PreconditionError("A and b disagree in the number of rows")
        self.d = self.A.shape[1]
        self._norms = np.linalg.norm(self.A, axis=1)
        if np.any(self._norms == 0):
            raise PreconditionError("constraint rows must be nonzero")

    def contains(self, x):
        return bool(np.all(self.A @ np.asarray(x, float) <= self.b))

    def contains_many(self, P):
        return np.all(np.asarray(P, float) @ self.A.T <= self.b, axis=1)

    def separate(self, x):
        x = np.asarray(x, float)
        viol = (self.A @ x - self.b) / self._norms
        k = int(np.argmax(viol))
        if viol[k] <= 0:
            return INSIDE
        return Hyperplane(self.A[k] / self._norms[k], self.b[k] / self._norms[k])

    def chord(self, x, u):
        tm, tp = self.chords(np.asarray(x, float)[None, :], np.asarray(u, float)[None, :])
        return float(tm[0]), float(tp[0])

    def chords(self, P, U, cap=None):
        slack = self.b - P @ self.A.T
        rate = U @ self.A.T
        with np.errstate(divide="ignore", invalid="ignore"):
            fwd = np.where(rate > 0, slack / rate, np.inf)
            bwd = np.where(rate < 0, -slack / rate, np.inf)
        return np.maximum(bwd.min(axis=1), 0.0), np.maximum(fwd.min(axis=1), 0.0)

    def classify_cells(self, lows, size, cache=None):
        # row-wise extremes of a.x over a box are attained at sign-chosen corners
        lows = np.asarray(lows, float)
        hi_part = np.where(self.A > 0, self.A, 0.0) @ size
        lo_part = np.where(self.A < 0, self.A, 0.0) @ size
        base = lows @ self.A.T
        inside = np.all(base + hi_part <= self.b, axis=1)
        outside = np.any(base + lo_part > self.b, axis=1)
        return np.where(inside, 1, np.where(outside, -1, 0)).astype(np.int8)

    @cached_property
    def _chebyshev(self):
        d = self.d
        c = np.zeros(d + 1)
        c[-1] = -1.0
        A = np.hstack([self.A, self._norms[:, None]])
        sol = solve_lp(LpProblem(c=c, A_ub=A, b_ub=self.b,
                                 bounds=[(None, None)] * d + [(0, None)]))
        if not sol.optimal or sol.x[-1] <= 0:
            raise VolumeFailure("polytope has empty interior or is unbounded")
        return sol.x[:d], float(sol.x[-1])

    def inner_ball(self):
        return self._chebyshev

    def bounding_box(self):
        lo, hi = np.empty(self.d), np.empty(self.d)
        for j in range(self.d):
            for sign, out in ((1.0, lo), (-1.0, hi)):
                c = np.zeros(self.d)
                c[j] = sign
                sol = solve_lp(LpProblem(c=c, A_ub=self.A, b_ub=self.b,
                                         bounds=[(None, None)] * self.d))
                if not sol.optimal:
                    raise VolumeFailure("polytope is unbounded")
                out[j] = sol.x[j]
        return lo, hi

    def outer_ball(self):
        lo, hi = self.bounding_box()
        c = 0.5 * (lo + hi)
        return c, float(np.linalg.norm(hi - c))


def unit_cube(d):
    """``[0, 1]^d`` as a polytope."""
    return PolytopeBody(np.vstack([np.eye(d), -np.eye(d)]),
                        np.concatenate([np.ones(d), np.zeros(d)]))


def standard_simplex(d):
    """``{x >= 0, sum x <= 1}`` as a polytope."""
    return PolytopeBody(np.vstack([-np.eye(d), np.ones((1, d))]),
                        np.concatenate([np.zeros(d), [1.0]]))


class TentLevelSet(ConvexBody):
    """Superlevel set ``{x in hull : h(x) >= log_level}`` of a tent function.

    ``log_level=None`` gives the whole hull.  Chords and the bounding box are
    exact LP optima over the lifted representation ``x = X a``.
    """

    def __init__(self, X: SampleSet, y, log_level=None):
        self.X = X
        self.d = X.d
        self.y = heights_of(y)
        self.lp = TentLP(X, self.y)
        self.apex_index = int(np.argmax(self.y))
        self.h_max = float(self.y[self.apex_index])
        if log_level is not None:
            log_level = float(log_level)
            if log_level > self.h_max:
                raise PreconditionError("level lies above the tent maximum")
        self.log_level = log_level
        n, d = X.n, X.d
        extra = 0 if log_level is None else 1
        rows = d + 1 + extra
        # columns: alpha (n), [s], t
        A = np.zeros((rows, n + extra + 1))
        A[:d, :n] = X.points
        A[d, :n] = 1.0
        if extra:
            A[d + 1, :n] = self.y
            A[d + 1, n] = -1.0
        self._chord_A = A
        self._chord_c = np.zeros(n + extra + 1)
        self._chord_c[-1] = -1.0
        self._rhs = np.zeros(rows)
        self._rhs[d] = 1.0
        if extra:
            self._rhs[d + 1] = log_level

    @property
    def is_hull(self):
        return self.log_level is None

    def contains(self, x):
        h = self.lp.value(np.asarray(x, float))
        if h is OUTSIDE_HULL:
            return False
        return self.log_level is None or h >= self.log_level

    def separate(self, x):
        x = np.asarray(x, float)
        if self.log_level is None:
            sep = hull_separator(self.X, x)
            return INSIDE if sep is None else sep
        return separation_oracle(self.X, self.y, self.log_level, x, log=True)

    def _ray(self, x, u):
        A = self._chord_A.copy()
        A[:self.d, -1] = -u
        b = self._rhs.copy()
        b[:self.d] = x
        res = simplex_standard(A, b, self._chord_c, check=False)
        if res.status == INFEASIBLE:
            return 0.0
        return max(0.0, float(res.z[-1]))

    def chord(self, x, u):
        x = np.asarray(x, float)
        u = np.asarray(u, float)
        return self._ray(x, -u), self._ray(x, u)

    @cached_property
    def _box(self):
        n, d = self.X.n, self.d
        extra = 0 if self.log_level is None else 1
        A = np.ascontiguousarray(self._chord_A[d:, :n + extra])
        b = self._rhs[d:].copy()
        lo, hi = np.empty(d), np.empty(d)
        for j in range(d):
            c = np.zeros(n + extra)
            c[:n] = self.X.points[j]
            r_lo = simplex_standard(A, b, c, check=False)
            r_hi = simplex_standard(A, b, np.ascontiguousarray(-c), check=False)
            lo[j] = self.X.points[j] @ r_lo.z[:n]
            hi[j] = self.X.points[j] @ r_hi.z[:n]
        return lo, hi

    def bounding_box(self):
        lo, hi = self._box
        return lo.copy(), hi.copy()

    def interval(self):
        if self.d != 1:
            raise PreconditionError("interval() is only defined for d = 1")
        lo, hi = self._box
        return float(lo[0]), float(hi[0])

    @cached_property
    def _inner(self):
        c0, r0 = self.X.inner_ball
        if self.log_level is None:
            return c0, r0
        span = self.h_max - float(self.y.min())
        lam = 1.0 if span <= 0 else min(1.0, (self.h_max - self.log_level) / span)
        apex = self.X.points[:, self.apex_index]
        # h(apex + lam (z - apex)) >= h_max - lam * span for every z in the hull
        return apex + lam * (c0 - apex), lam * r0

    def inner_ball(self):
        c, r = self._inner
        return c.copy(), r

    def outer_ball(self):
        lo, hi = self._box
        c = 0.5 * (lo + hi)
        return c, float(np.linalg.norm(hi - c))

    def radius_from(self, center):
        """Radius of a ball around ``center`` containing the body."""
        lo, hi = self._box
        far = np.where(np.abs(lo - center) > np.abs(hi - center), lo, hi)
        return float(np.linalg.norm(far - center))

    def cached_membership(self):
        """Membership with a per-body memo, keyed on the exact coordinates."""
        memo = {}

        def lookup(body, p):
            key = p.tobytes()
            hit = memo.get(key)
            if hit is None:
                hit = memo[key] = body.contains(p)
            return hit
        return lookup


def hull_body(X: SampleSet):
    return TentLevelSet(X, np.zeros(X.n), None)
