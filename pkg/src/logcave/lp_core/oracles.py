"""Tent-function oracles built on the packing LP and its covering dual.

For heights ``y`` at the poles ``X_1..X_n`` the tent function is

    h(x) = max y @ a   s.t.   X a = x,  1 @ a = 1,  a >= 0,

and ``-inf`` outside the hull.  The dual of that LP is the covering LP
``min b0 + b @ x  s.t.  b0 + b @ X_i >= y_i``, so a single solve returns
both the tent value and a supporting affine function.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import DegenerateLevel, OutsideHullError, PreconditionError
from .samples import SampleSet
from .simplex import FEAS_TOL, INFEASIBLE, simplex_standard

__all__ = [
    "OUTSIDE_HULL", "INSIDE", "Hyperplane", "Statistic", "TentLP", "is_outside",
    "tent_evaluate", "tent_support", "polyhedral_statistic",
    "membership_oracle", "separation_oracle", "hull_separator",
    "heights_of",
]


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name

    def __reduce__(self):
        return self._name


OUTSIDE_HULL = _Sentinel("OUTSIDE_HULL")
"""Returned by :func:`tent_evaluate` for queries outside the convex hull."""

INSIDE = _Sentinel("INSIDE")
"""Returned by :func:`separation_oracle` when the query is in the superlevel set."""


def is_outside(value):
    return value is OUTSIDE_HULL


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Halfspace ``{x : normal @ x <= offset}`` containing the separated set.

    The query point lies strictly on the other side.  ``normal`` is unit length.
    """

    normal: np.ndarray
    offset: float
    sense: str = "<="

    def __post_init__(self):
        nrm = np.asarray(self.normal, dtype=float)
        if not np.any(nrm):
            raise PreconditionError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", nrm)
        object.__setattr__(self, "offset", float(self.offset))

    def includes(self, x, tol=0.0):
        return float(self.normal @ np.asarray(x, dtype=float)) <= self.offset + tol

    def margin(self, x):
        """Signed distance, positive on the excluded side."""
        return float(self.normal @ np.asarray(x, dtype=float)) - self.offset


class Statistic(NamedTuple):
    """Optimal mixing weights of the packing LP at a query point."""

    weights: np.ndarray
    value: float
    boundary: bool


def heights_of(y):
    """Return the pole heights as a contiguous float array (accepts TentParams)."""
    return np.ascontiguousarray(getattr(y, "y", y), dtype=float)


def _query(X: SampleSet, x):
    q = np.asarray(x, dtype=float).reshape(-1)
    if q.shape != (X.d,):
        raise PreconditionError(f"query must have dimension {X.d}")
    if not np.all(np.isfinite(q)):
        raise PreconditionError("query point must be finite")
    b = np.empty(X.d + 1)
    b[:-1] = q
    b[-1] = 1.0
    return q, b


class TentLP:
    """Packing LP for fixed ``(X, y)``, reusable across many query points."""

    def __init__(self, X: SampleSet, y):
        yv = heights_of(y)
        if yv.shape != (X.n,):
            raise PreconditionError(f"expected {X.n} heights, got shape {yv.shape}")
        if not np.all(np.isfinite(yv)):
            raise PreconditionError("heights must be finite")
        self.X = X
        self.y = yv
        self._A = X.augmented
        self._c = np.ascontiguousarray(-yv)

    def solve(self, x):
        b = np.empty(self.X.d + 1)
        b[:-1] = x
        b[-1] = 1.0
        return simplex_standard(self._A, b, self._c, check=False)

    def value(self, x):
        """Tent value at an already validated query, or :data:`OUTSIDE_HULL`."""
        res = self.solve(x)
        if res.status == INFEASIBLE:
            return OUTSIDE_HULL
        return float(self.y @ res.z)

    def statistic(self, x) -> Statistic:
        res = self.solve(x)
        if res.status == INFEASIBLE:
            raise OutsideHullError("query point lies outside the convex hull")
        T = np.clip(res.z, 0.0, None)
        return Statistic(T, float(self.y @ T), bool(res.alternative_optima))


def _solve_packing(X, y, x):
    lp = TentLP(X, y)
    q, _ = _query(X, x)
    return lp.y, q, lp.solve(q)


def tent_evaluate(X: SampleSet, y, x):
    """Value of the tent function at ``x``, or :data:`OUTSIDE_HULL`.

    >>> X = SampleSet([[0.0, 1.0]])
    >>> tent_evaluate(X, [1.0, -1.0], [0.25])
    0.5
    >>> tent_evaluate(X, [0.0, 0.0], [2.0])
    OUTSIDE_HULL
    """
    yv, _, res = _solve_packing(X, y, x)
    if res.status == INFEASIBLE:
        return OUTSIDE_HULL
    return float(yv @ res.z)


def tent_support(X: SampleSet, y, x):
    """Tent value and a supporting affine majorant ``(b0, b)`` at ``x``.

    The returned pair satisfies ``b0 + b @ X_i >= y_i`` for every pole and
    ``b0 + b @ x == h(x)``.  Raises :class:`OutsideHullError` off the hull.
    """
    yv, q, res = _solve_packing(X, y, x)
    if res.status == INFEASIBLE:
        raise OutsideHullError("query point lies outside the convex hull")
    beta = -res.duals
    return float(yv @ res.z), float(beta[-1]), beta[:-1].copy()


def polyhedral_statistic(X: SampleSet, y, x) -> Statistic:
    """Optimal convex weights ``T`` with ``X @ T = x`` and ``T @ y = h(x)``.

    When the optimum is not unique the solver's vertex is returned and
    ``boundary`` is set.
    """
    q, _ = _query(X, x)
    return TentLP(X, y).statistic(q)


def _log_level(level, log):
    if log:
        ll = float(level)
        if not np.isfinite(ll):
            raise PreconditionError("log-level must be finite")
        return ll
    if not level > 0:
        raise PreconditionError("level must be positive")
    return float(np.log(level))


def membership_oracle(X: SampleSet, y, level, x, *, log=False):
    """True iff ``exp(h(x)) >= level``; with ``log=True`` the level is ``ln(level)``."""
    ll = _log_level(level, log)
    h = tent_evaluate(X, y, x)
    return h is not OUTSIDE_HULL and h >= ll


def hull_separator(X: SampleSet, x):
    """Hyperplane separating an outside point ``x`` from the hull, or None if inside.

    Solves ``min r0 + r @ x  s.t.  r0 + r @ X_i >= 0,  -1 <= r_j <= 1``.
    """
    q, _ = _query(X, x)
    d, n = X.d, X.n
    # variables: r0+ r0- (free split), r+ r- (each in [0,1]), slacks for
    # the n covering rows and the d box rows
    nv = 2 + 2 * d + n + d
    A = np.zeros((n + d, nv))
    b = np.zeros(n + d)
    P = X.points
    A[:n, 0] = 1.0
    A[:n, 1] = -1.0
    A[:n, 2:2 + d] = P.T
    A[:n, 2 + d:2 + 2 * d] = -P.T
    A[:n, 2 + 2 * d:2 + 2 * d + n] = -np.eye(n)
    # r+_j + r-_j <= 1 keeps |r_j| <= 1 (an optimum never has both positive)
    A[n:, 2:2 + d] = np.eye(d)
    A[n:, 2 + d:2 + 2 * d] = np.eye(d)
    A[n:, 2 + 2 * d + n:] = np.eye(d)
    b[n:] = 1.0
    c = np.zeros(nv)
    c[0], c[1] = 1.0, -1.0
    c[2:2 + d] = q
    c[2 + d:2 + 2 * d] = -q
    res = simplex_standard(A, b, c)
    v = c @ res.z
    scale = max(1.0, float(np.abs(q).max()), float(np.abs(P).max()))
    if v >= -FEAS_TOL * scale:
        return None
    r0 = res.z[0] - res.z[1]
    r = res.z[2:2 + d] - res.z[2 + d:2 + 2 * d]
    # {r0 + r.x' >= v/2}  <=>  {-r.x' <= r0 - v/2}
    nrm = float(np.linalg.norm(r))
    return Hyperplane(-r / nrm, (r0 - v / 2) / nrm)


def separation_oracle(X: SampleSet, y, level, x, *, log=False):
    """:data:`INSIDE` or a :class:`Hyperplane` cutting ``x`` from ``{exp h >= level}``.

    Inside the hull the cut comes from the covering-LP optimum ``(b0, b)``:
    with gap ``g = ln(level) - h(x) > 0`` the included side is
    ``b0 + b @ x' >= ln(level) - g/2``.  Outside the hull the cut separates
    ``x`` from the whole hull.
    """
    ll = _log_level(level, log)
    yv = heights_of(y)
    if ll > float(yv.max()) + FEAS_TOL * max(1.0, abs(ll)):
        raise DegenerateLevel("level exceeds the maximum of the tent density")
    yv, q, res = _solve_packing(X, yv, x)
    if res.status == INFEASIBLE:
        return hull_separator(X, q)
    h = float(yv @ res.z)
    if h >= ll:
        return INSIDE
    beta = -res.duals
    b0, b = float(beta[-1]), beta[:-1]
    nrm = float(np.linalg.norm(b))
    if nrm == 0.0:
        # a constant majorant below ll means the superlevel set is empty
        raise DegenerateLevel("superlevel set is empty")
    gap = ll - h
    return Hyperplane(-b / nrm, (b0 - (ll - gap / 2)) / nrm)
