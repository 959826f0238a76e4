import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.spatial import ConvexHull

from logcave.errors import NeighborhoodCrossing, PreconditionError
from logcave.lp_core import SampleSet, tent_evaluate
from logcave.oracle import (batch_loglik_1d, brute_force_mle, exact_partition_1d,
                            exact_partition_2d, finite_difference_gradA, hellinger_check,
                            tent_cdf_1d, tent_inverse_cdf_1d, triangle_exp_integral,
                            upper_envelope_1d)
from logcave.tent_model import TentDensity, TentParams

from conftest import random_sample


def quad_partition_1d(x, y):
    X = SampleSet([x])
    lo, hi = min(x), max(x)
    pts = sorted(x)
    val, _ = integrate.quad(lambda t: np.exp(tent_evaluate(X, y, [t])), lo, hi,
                            points=pts[1:-1] or None, epsabs=1e-13, epsrel=1e-12, limit=200)
    return np.log(val)


def lifted_hull_partition_2d(P, y):
    """Exact 2-d log-partition from the upper facets of the lifted points."""
    lifted = np.column_stack([P.T, y])
    hull = ConvexHull(lifted)
    total = 0.0
    for simplex, eq in zip(hull.simplices, hull.equations):
        if eq[2] <= 1e-12:
            continue
        V = lifted[simplex]
        # plane z = a + b x + c y through the three lifted vertices
        coef = np.linalg.solve(np.column_stack([np.ones(3), V[:, :2]]), V[:, 2])
        xs = V[:, 0]
        order = np.argsort(xs)
        A, B, C = V[order, :2]

        def line(p, q, t):
            return p[1] + (q[1] - p[1]) * (t - p[0]) / (q[0] - p[0]) if q[0] != p[0] else p[1]

        f = lambda yy, xx: np.exp(coef[0] + coef[1] * xx + coef[2] * yy)
        for (p0, p1), (q0, q1) in (((A, C), (A, B)), ((A, C), (B, C))):
            a, b = max(p0[0], q0[0]), min(p1[0], q1[0])
            if b - a <= 0:
                continue
            g1 = lambda t: line(p0, p1, t)
            g2 = lambda t: line(q0, q1, t)
            val, _ = integrate.dblquad(
                f, a, b, lambda t: min(g1(t), g2(t)), lambda t: max(g1(t), g2(t)),
                epsabs=1e-13, epsrel=1e-11)
            total += val
    return np.log(total)


# --- one dimension -------------------------------------------------------

def test_partition_1d_closed_form():
    # integral of exp(1 - 2t) on [0, 1] is e - 1/e over 2 = sinh(1)
    assert exact_partition_1d([0.0, 1.0], [1.0, -1.0]) == pytest.approx(np.log(np.sinh(1.0)), abs=1e-14)
    assert exact_partition_1d([0.0, 2.0], [0.0, 0.0]) == pytest.approx(np.log(2.0))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_partition_1d_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    x = np.sort(rng.uniform(-2, 2, n))
    y = rng.uniform(-2, 2, n)
    assert exact_partition_1d(x, y) == pytest.approx(quad_partition_1d(list(x), y), abs=1e-9)


def test_envelope_drops_interior_dips():
    env = upper_envelope_1d([0.0, 0.5, 1.0], [0.0, -3.0, 0.0])
    assert env.indices == (0, 2)
    assert env(0.5) == pytest.approx(0.0)


def test_envelope_is_shift_invariant_in_x():
    a = exact_partition_1d([0.0, 0.3, 1.0], [0.2, 0.5, -0.7])
    b = exact_partition_1d([10.0, 10.3, 11.0], [0.2, 0.5, -0.7])
    assert a == pytest.approx(b, abs=1e-12)


def test_partition_1d_large_heights_stable():
    val = exact_partition_1d([0.0, 1.0], [700.0, -700.0])
    assert np.isfinite(val)
    assert val == pytest.approx(700.0 - np.log(1400.0), abs=1e-9)


def test_cdf_inverse_round_trip():
    x, y = [0.0, 0.3, 1.0], [0.4, 0.6, -1.0]
    u = np.linspace(0.01, 0.99, 25)
    t = tent_inverse_cdf_1d(x, y, u)
    assert tent_cdf_1d(x, y, t) == pytest.approx(u, abs=1e-10)
    assert tent_cdf_1d(x, y, [-1.0, 2.0]) == pytest.approx([0.0, 1.0])


def test_batch_loglik_matches_scalar():
    rng = np.random.default_rng(3)
    x = np.array([0.0, 0.2, 0.5, 1.0])
    Y = rng.normal(size=(20, 4))
    X = SampleSet([x])
    for row, got in zip(Y, batch_loglik_1d(x, Y)):
        h = sum(tent_evaluate(X, row, [xi]) for xi in x)
        assert got == pytest.approx(h - 4 * exact_partition_1d(x, row), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_partition_midpoint_convex(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    x = np.sort(rng.uniform(-1, 1, n))
    a, b = rng.uniform(-2, 2, (2, n))
    mid = exact_partition_1d(x, (a + b) / 2)
    assert mid <= 0.5 * (exact_partition_1d(x, a) + exact_partition_1d(x, b)) + 1e-6


# --- two dimensions ------------------------------------------------------

def test_triangle_integral_constant_and_linear():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert triangle_exp_integral(V, [0.0, 0.0, 0.0]) == pytest.approx(0.5)
    # integral of exp(x) over the unit triangle is e - 2
    assert triangle_exp_integral(V, [0.0, 1.0, 0.0]) == pytest.approx(np.e - 2, rel=1e-13)
    # repeated values go through the same path without cancellation
    assert triangle_exp_integral(V, [1.0, 1.0, 1.0 + 1e-12]) == pytest.approx(0.5 * np.e, rel=1e-10)


def test_partition_2d_square_uniform(square):
    assert exact_partition_2d(square, np.zeros(4)) == pytest.approx(0.0, abs=1e-8)


def test_partition_2d_triangle_closed_form(triangle):
    assert exact_partition_2d(triangle, [0.0, 1.0, -1.0]) == pytest.approx(
        np.log(triangle_exp_integral(triangle.points.T, [0.0, 1.0, -1.0])))


@pytest.mark.parametrize("seed", range(4))
def test_partition_2d_matches_lifted_hull(seed):
    rng = np.random.default_rng(seed)
    X = random_sample(rng, 5, 2)
    y = rng.uniform(-1, 1, 5)
    y -= y.mean()
    assert exact_partition_2d(X, y) == pytest.approx(lifted_hull_partition_2d(X.points, y), abs=1e-7)


@pytest.mark.parametrize("seed", range(3))
def test_partition_2d_facets_match_certified_quadrature(seed):
    rng = np.random.default_rng(10 + seed)
    X = random_sample(rng, 6, 2)
    y = rng.uniform(-1, 1, 6)
    exact = exact_partition_2d(X, y)
    assert exact_partition_2d(X, y, tol=1e-5, method="quadrature") == pytest.approx(exact, abs=1e-5)


def test_partition_2d_interior_pole_below_tent(square):
    pts = np.column_stack([square.points, [0.5, 0.5]])
    assert exact_partition_2d(SampleSet(pts), [0, 0, 0, 0, -3.0]) == pytest.approx(0.0, abs=1e-12)


def test_partition_2d_requires_d2(segment):
    with pytest.raises(PreconditionError):
        exact_partition_2d(segment, [0.0, 0.0])


# --- brute force, gradients, Hellinger ----------------------------------

def test_brute_force_two_points_uniform():
    y, ll = brute_force_mle([0.0, 1.0])
    assert y == pytest.approx([0.0, 0.0])
    assert ll == pytest.approx(0.0, abs=1e-12)


def test_brute_force_frozen_value():
    # frozen from an exhaustive run (radius 5, step 0.05)
    y, ll = brute_force_mle([0.0, 0.1, 0.2, 1.0])
    assert ll == pytest.approx(0.7642317496, abs=1e-8)
    assert y.sum() == pytest.approx(0.0, abs=1e-9)


def test_brute_force_relabel_invariant_and_beats_uniform():
    x = np.array([0.0, 0.3, 1.0])
    _, ll = brute_force_mle(x)
    _, ll_perm = brute_force_mle(x[[2, 0, 1]])
    assert ll == pytest.approx(ll_perm, abs=1e-12)
    # the uniform density on the hull has loglik -n ln(length)
    assert ll >= -3 * np.log(1.0)


def test_brute_force_limits():
    with pytest.raises(PreconditionError):
        brute_force_mle(np.arange(6.0))


def test_fd_gradient_matches_mean_statistic():
    g = finite_difference_gradA([0.0, 1.0], [1.0, -1.0], project=False)
    # E[T_0] = integral (1 - t) exp(1 - 2t) / sinh(1)
    num, _ = integrate.quad(lambda t: (1 - t) * np.exp(1 - 2 * t), 0, 1)
    e0 = num / np.sinh(1.0)
    assert g == pytest.approx([e0, 1 - e0], abs=1e-8)
    assert finite_difference_gradA([0.0, 1.0], [1.0, -1.0]).sum() == pytest.approx(0.0, abs=1e-12)


def test_fd_gradient_neighbourhood_crossing():
    with pytest.raises(NeighborhoodCrossing):
        finite_difference_gradA([0.0, 0.5, 1.0], [0.0, 0.0, 0.0])


def test_hellinger_uniform_vs_tent():
    X = SampleSet([[0.0, 1.0]])
    td = TentDensity(X, TentParams([0.0, 0.0]))
    assert hellinger_check(lambda t: 1.0 if 0 <= t <= 1 else 0.0, td) == pytest.approx(0.0, abs=1e-10)
    # half the mass of U[0, 2] sits off the hull
    h2 = hellinger_check(lambda t: 0.5 if 0 <= t <= 2 else 0.0, td, support=[0.0, 2.0])
    assert h2 == pytest.approx(1 - np.sqrt(0.5), abs=1e-8)
