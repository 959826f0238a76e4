"""
Dense two-phase primal simplex.

The tableau solver works on problems in standard form

    minimize    c @ z
    subject to  A @ z == b,  z >= 0

and :func:`solve_lp` converts general problems (inequalities, free and
bounded variables, maximization) into that form.  Pivoting uses Dantzig's
rule and falls back to Bland's rule after a run of degenerate pivots, so
results are deterministic for a given input.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from numba import njit

from ..errors import NumericalFailure, PreconditionError

__all__ = ["LpProblem", "LpSolution", "solve_lp", "simplex_standard",
           "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "FEAS_TOL"]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-11
_DEGENERATE_STREAK = 20


@dataclass
class LpProblem:
    """A linear program ``min/max c @ x`` with mixed constraints.

    ``bounds`` holds one ``(lo, hi)`` pair per variable, ``None`` meaning
    unbounded on that side.  Omitted bounds default to ``x >= 0``.
    """

    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[Sequence[Tuple[Optional[float], Optional[float]]]] = None
    maximize: bool = False


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    # d(objective)/d(rhs) for each constraint row
    dual_ub: Optional[np.ndarray] = None
    dual_eq: Optional[np.ndarray] = None
    alternative_optima: bool = False
    iterations: int = 0
    residuals: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == OPTIMAL


@dataclass
class _StandardResult:
    status: str
    z: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    reduced: Optional[np.ndarray] = None
    alternative_optima: bool = False
    iterations: int = 0
    primal_residual: float = 0.0
    slackness_residual: float = 0.0


_ST_OPTIMAL, _ST_INFEASIBLE, _ST_UNBOUNDED, _ST_ITERLIMIT = 0, 1, 2, 3


@njit(cache=True)
def _pivot(T, basis, row, col):
    rows, cols = T.shape
    p = T[row, col]
    for k in range(cols):
        T[row, k] /= p
    for i in range(rows):
        if i != row:
            f = T[i, col]
            if f != 0.0:
                for k in range(cols):
                    T[i, k] -= f * T[row, k]
    basis[row] = col


@njit(cache=True)
def _run_simplex(T, basis, n_allowed, opt_tol, max_iter):
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    streak = 0
    for it in range(max_iter):
        j = -1
        best_r = -opt_tol
        bland = streak >= _DEGENERATE_STREAK
        for k in range(n_allowed):
            r = T[m, k]
            if r < -opt_tol:
                if bland:
                    j = k
                    break
                if r < best_r:
                    best_r = r
                    j = k
        if j < 0:
            return _ST_OPTIMAL, it
        i = -1
        best = np.inf
        for q in range(m):
            a = T[q, j]
            if a > _PIVOT_TOL:
                ratio = T[q, rhs] / a
                if i < 0 or ratio < best - 1e-12 * max(1.0, abs(best)):
                    best = ratio
                    i = q
                elif ratio <= best + 1e-12 * max(1.0, abs(best)) and basis[q] < basis[i]:
                    # Bland tie-break on the leaving variable
                    i = q
        if i < 0:
            return _ST_UNBOUNDED, it
        if best <= 1e-12:
            streak += 1
        else:
            streak = 0
        _pivot(T, basis, i, j)
    return _ST_ITERLIMIT, max_iter


@njit(cache=True)
def _dense_solve(B, rhs):
    """Gaussian elimination with partial pivoting; returns (x, ok)."""
    m = B.shape[0]
    M = B.copy()
    x = rhs.copy()
    for k in range(m):
        p = k
        for i in range(k + 1, m):
            if abs(M[i, k]) > abs(M[p, k]):
                p = i
        if abs(M[p, k]) < 1e-14:
            return x, False
        if p != k:
            for q in range(m):
                M[k, q], M[p, q] = M[p, q], M[k, q]
            x[k], x[p] = x[p], x[k]
        for i in range(k + 1, m):
            f = M[i, k] / M[k, k]
            if f != 0.0:
                for q in range(k, m):
                    M[i, q] -= f * M[k, q]
                x[i] -= f * x[k]
    for k in range(m - 1, -1, -1):
        s = x[k]
        for q in range(k + 1, m):
            s -= M[k, q] * x[q]
        x[k] = s / M[k, k]
    return x, True


@njit(cache=True)
def _simplex_core(A, b, c, feas_tol, max_iter):
    m, n = A.shape
    width = n + m + 1
    T = np.zeros((m + 1, width))
    sign = np.ones(m)
    amax = 0.0
    bmax = 0.0
    cmax = 0.0
    for i in range(m):
        if b[i] < 0:
            sign[i] = -1.0
        for j in range(n):
            v = A[i, j] * sign[i]
            T[i, j] = v
            T[m, j] -= v
            if abs(v) > amax:
                amax = abs(v)
        T[i, n + i] = 1.0
        T[i, width - 1] = b[i] * sign[i]
        T[m, width - 1] -= b[i] * sign[i]
        if abs(b[i]) > bmax:
            bmax = abs(b[i])
    for j in range(n):
        if abs(c[j]) > cmax:
            cmax = abs(c[j])
    scale_b = 1.0 + bmax
    scale_c = 1.0 + cmax
    basis = np.arange(n, n + m)

    z = np.zeros(n)
    pi = np.zeros(m)
    reduced = np.zeros(n)
    st, it1 = _run_simplex(T, basis, n + m, 1e-11 * (1.0 + amax), max_iter)
    if st == _ST_ITERLIMIT:
        return _ST_ITERLIMIT, z, pi, reduced, False, it1, 0.0, 0.0
    if -T[m, width - 1] > feas_tol * scale_b:
        return _ST_INFEASIBLE, z, pi, reduced, False, it1, 0.0, 0.0

    # pivot zero-level artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            k = -1
            big = 1e-9
            for j in range(n):
                if abs(T[i, j]) > big:
                    big = abs(T[i, j])
                    k = j
            if k >= 0:
                _pivot(T, basis, i, k)

    c_full = np.zeros(n + m)
    c_full[:n] = c
    for j in range(width):
        s = 0.0
        for i in range(m):
            s += c_full[basis[i]] * T[i, j]
        if j < n + m:
            T[m, j] = c_full[j] - s
        else:
            T[m, j] = -s
    st, it2 = _run_simplex(T, basis, n, 1e-11 * scale_c, max_iter)
    if st != _ST_OPTIMAL:
        return st, z, pi, reduced, False, it1 + it2, 0.0, 0.0

    # recompute basic values and duals from the basis matrix itself
    B = np.zeros((m, m))
    cb = np.zeros(m)
    bs = np.zeros(m)
    for i in range(m):
        bs[i] = b[i] * sign[i]
        col = basis[i]
        cb[i] = c_full[col]
        if col < n:
            for r in range(m):
                B[r, i] = A[r, col] * sign[r]
        else:
            B[col - n, i] = 1.0
    zb, ok = _dense_solve(B, bs)
    pi_s, ok2 = _dense_solve(B.T.copy(), cb)
    if not (ok and ok2):
        for i in range(m):
            zb[i] = T[i, width - 1]
        for r in range(m):
            s = 0.0
            for i in range(m):
                s += cb[i] * T[i, n + r]
            pi_s[r] = s
    z_art = 0.0
    zmin = 0.0
    for i in range(m):
        v = zb[i]
        if v < 0 and v > -feas_tol * scale_b:
            v = 0.0
        if v < zmin:
            zmin = v
        if basis[i] < n:
            z[basis[i]] = v
        elif abs(v) > z_art:
            z_art = abs(v)

    primal = z_art
    for r in range(m):
        s = -bs[r]
        for j in range(n):
            s += A[r, j] * sign[r] * z[j]
        if abs(s) > primal:
            primal = abs(s)
    slack = 0.0
    dual_neg = 0.0
    for j in range(n):
        s = c[j]
        for r in range(m):
            s -= A[r, j] * sign[r] * pi_s[r]
        reduced[j] = s
        if abs(z[j] * s) > slack:
            slack = abs(z[j] * s)
        if -s > dual_neg:
            dual_neg = -s
    alt = False
    for j in range(n):
        is_basic = False
        for i in range(m):
            if basis[i] == j:
                is_basic = True
                break
        if not is_basic and abs(reduced[j]) <= 1e-9 * scale_c:
            alt = True
            break
    for r in range(m):
        pi[r] = pi_s[r] * sign[r]
    if primal > feas_tol * scale_b or zmin < -feas_tol * scale_b:
        return 4, z, pi, reduced, alt, it1 + it2, primal, slack
    if slack > feas_tol * scale_b * scale_c or dual_neg > feas_tol * scale_c:
        return 5, z, pi, reduced, alt, it1 + it2, primal, max(slack, dual_neg)
    return _ST_OPTIMAL, z, pi, reduced, alt, it1 + it2, primal, slack


_STATUS = {_ST_OPTIMAL: OPTIMAL, _ST_INFEASIBLE: INFEASIBLE, _ST_UNBOUNDED: UNBOUNDED}


def simplex_standard(A, b, c, feas_tol=FEAS_TOL, max_iter=None, check=True):
    """Solve ``min c @ z, A @ z == b, z >= 0`` with the two-phase method.

    Raises :class:`NumericalFailure` when the final basis violates
    feasibility or complementary slackness by more than ``feas_tol``
    (scaled by the data magnitude).  ``check=False`` skips input
    validation for callers that build the arrays themselves.
    """
    if check:
        A = np.ascontiguousarray(A, dtype=float)
        b = np.ascontiguousarray(b, dtype=float)
        c = np.ascontiguousarray(c, dtype=float)
        m, n = A.shape
        if b.shape != (m,) or c.shape != (n,):
            raise PreconditionError("inconsistent LP dimensions")
        if not (np.isfinite(A).all() and np.isfinite(b).all() and np.isfinite(c).all()):
            raise PreconditionError("LP coefficients must be finite")
    if max_iter is None:
        max_iter = 50 * (A.shape[0] + A.shape[1]) + 100
    st, z, pi, reduced, alt, its, primal, slack = _simplex_core(A, b, c, feas_tol, max_iter)
    if st == _ST_ITERLIMIT:
        raise NumericalFailure(f"simplex did not terminate within {max_iter} pivots")
    if st == 4:
        raise NumericalFailure(f"primal residual {primal:.3e} exceeds tolerance")
    if st == 5:
        raise NumericalFailure(f"complementary slackness residual {slack:.3e} exceeds tolerance")
    if st != _ST_OPTIMAL:
        return _StandardResult(_STATUS[st], iterations=its)
    return _StandardResult(OPTIMAL, z=z, duals=pi, reduced=reduced,
                           alternative_optima=alt, iterations=its,
                           primal_residual=primal, slackness_residual=slack)


def _as_2d(A, ncols):
    if A is None:
        return np.zeros((0, ncols))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[1] != ncols:
        raise PreconditionError("constraint matrix has the wrong number of columns")
    return A


def solve_lp(problem: LpProblem, feas_tol: float = FEAS_TOL) -> LpSolution:
    """Solve a general LP with the dense two-phase simplex.

    Examples
    --------
    >>> sol = solve_lp(LpProblem(c=np.array([1.0]), A_ub=[[1.0]], b_ub=[1.0], maximize=True))
    >>> sol.status, float(sol.x[0])
    ('optimal', 1.0)
    """
    c = np.asarray(problem.c, dtype=float).ravel()
    nv = c.size
    A_ub = _as_2d(problem.A_ub, nv)
    A_eq = _as_2d(problem.A_eq, nv)
    b_ub = np.asarray(problem.b_ub if problem.b_ub is not None else [], dtype=float).ravel()
    b_eq = np.asarray(problem.b_eq if problem.b_eq is not None else [], dtype=float).ravel()
    if b_ub.size != A_ub.shape[0] or b_eq.size != A_eq.shape[0]:
        raise PreconditionError("right-hand side length does not match constraint rows")
    bounds = list(problem.bounds) if problem.bounds is not None else [(0.0, None)] * nv
    if len(bounds) != nv:
        raise PreconditionError("bounds must list one (lo, hi) pair per variable")

    # x = shift + M @ z with z >= 0
    cols = []
    shift = np.zeros(nv)
    bound_rows = []
    for j, (lo, hi) in enumerate(bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            return LpSolution(INFEASIBLE)
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    M = np.zeros((nv, nz))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s

    n_ub = A_ub.shape[0]
    n_bd = len(bound_rows)
    n_eq = A_eq.shape[0]
    n_slack = n_ub + n_bd
    rows = n_ub + n_bd + n_eq
    A = np.zeros((rows, nz + n_slack))
    b = np.zeros(rows)
    A[:n_ub, :nz] = A_ub @ M
    A[:n_ub, nz:nz + n_ub] = np.eye(n_ub)
    b[:n_ub] = b_ub - A_ub @ shift
    for r, (k, ub) in enumerate(bound_rows):
        A[n_ub + r, k] = 1.0
        A[n_ub + r, nz + n_ub + r] = 1.0
        b[n_ub + r] = ub
    A[n_ub + n_bd:, :nz] = A_eq @ M
    b[n_ub + n_bd:] = b_eq - A_eq @ shift

    sgn = -1.0 if problem.maximize else 1.0
    c_std = np.zeros(nz + n_slack)
    c_std[:nz] = sgn * (c @ M)

    res = simplex_standard(A, b, c_std, feas_tol=feas_tol)
    if res.status != OPTIMAL:
        return LpSolution(res.status, iterations=res.iterations)
    x = shift + M @ res.z[:nz]
    duals = sgn * res.duals
    return LpSolution(
        OPTIMAL,
        x=x,
        objective=float(c @ x),
        dual_ub=duals[:n_ub],
        dual_eq=duals[n_ub + n_bd:],
        alternative_optima=res.alternative_optima,
        iterations=res.iterations,
        residuals={"primal": res.primal_residual, "slackness": res.slackness_residual},
    )
