import numpy as np
import pytest
from scipy import stats

from logcave.errors import PreconditionError, RetryExhausted, VolumeFailure, WalkStuck
from logcave.lp_core import SampleSet, membership_oracle, tent_evaluate
from logcave.oracle import exact_partition_1d, exact_partition_2d
from logcave.sampler import (MembershipBody, SamplerConfig, TentLevelSet, TentSampler,
                             alpha_trials, build_decomposition, estimate_log_partition,
                             estimate_volume, hit_and_run, level_count,
                             sample_tent, standard_simplex, uniform_sample, unit_cube,
                             volume_with_error)

LN2 = np.log(2.0)


def tent_cdf(t):
    return (np.e - np.exp(1 - 2 * t)) / (np.e - np.exp(-1))


# --- configuration -------------------------------------------------------

@pytest.mark.parametrize("bad", [dict(delta=0.0), dict(delta=1.0), dict(tau=1.5),
                                 dict(walk_steps=0), dict(volume_backend="magic"),
                                 dict(alpha_estimator="median")])
def test_config_rejects(bad):
    with pytest.raises(PreconditionError):
        SamplerConfig(**bad)


def test_config_defaults():
    cfg = SamplerConfig(volume_backend="montecarlo")
    assert cfg.volume_backend == "mc"
    assert cfg.walk_steps_for(1) == 1
    assert cfg.walk_steps_for(3) == 900
    assert cfg.round_cap == int(np.ceil(64 * np.log(20)))


# --- bodies and chords ---------------------------------------------------

def test_polytope_chords_exact():
    sq = unit_cube(2)
    tm, tp = sq.chord(np.array([0.25, 0.5]), np.array([1.0, 0.0]))
    assert (tm, tp) == pytest.approx((0.25, 0.75))
    c, r = standard_simplex(2).inner_ball()
    assert r == pytest.approx(1 - 1 / np.sqrt(2))


def test_level_set_chord_and_interval(segment):
    body = TentLevelSet(segment, [1.0, -1.0], 1 - LN2)
    assert body.interval() == pytest.approx((0.0, LN2 / 2))
    tm, tp = body.chord(np.array([0.1]), np.array([1.0]))
    assert (tm, tp) == pytest.approx((0.1, LN2 / 2 - 0.1))


def test_level_set_inner_ball_is_inside(triangle):
    y = np.array([1.0, -0.5, -0.5])
    for ll in (0.9, 0.3, -0.4):
        body = TentLevelSet(triangle, y, ll)
        c, r = body.inner_ball()
        assert r > 0
        for ang in np.linspace(0, 2 * np.pi, 16, endpoint=False):
            assert body.contains(c + 0.999 * r * np.array([np.cos(ang), np.sin(ang)]))


def test_level_above_max_rejected(segment):
    with pytest.raises(PreconditionError):
        TentLevelSet(segment, [1.0, -1.0], 1.5)


def test_level_sets_nested(triangle):
    rng = np.random.default_rng(0)
    y = np.array([0.8, -0.3, -0.5])
    M = tent_evaluate(triangle, y, triangle.column(0))
    P = rng.uniform(-0.1, 1.1, size=(1000, 2))
    for p in P:
        for i in range(1, 4):
            if membership_oracle(triangle, y, M - i * LN2, p, log=True):
                assert membership_oracle(triangle, y, M - (i + 1) * LN2, p, log=True)


# --- volume --------------------------------------------------------------

@pytest.mark.parametrize("body,true", [(unit_cube(2), 1.0), (unit_cube(3), 1.0),
                                       (standard_simplex(2), 0.5),
                                       (standard_simplex(3), 1 / 6)])
def test_grid_volume_polytopes(body, true):
    est = volume_with_error(body, SamplerConfig(delta=0.05))
    assert abs(est.value / true - 1) <= 0.05
    assert est.rel_error <= 0.05 + 1e-12


def test_grid_without_separation_cannot_certify():
    body = MembershipBody(lambda P: np.all((P >= 0) & (P <= 1), axis=1), 2,
                          ([0.5, 0.5], 0.5), ([0.5, 0.5], np.sqrt(0.5)), vectorized=True)
    # cells outside the square are never proven outside, so the upper
    # bound stays at the bounding box and the grid gives up
    with pytest.raises(VolumeFailure):
        volume_with_error(body, SamplerConfig(delta=0.05, max_grid_cells=20_000))


def test_grid_rejects_high_dimension():
    with pytest.raises(VolumeFailure):
        volume_with_error(unit_cube(4), SamplerConfig(delta=0.05))


def test_level_set_volume_1d_exact(segment):
    body = TentLevelSet(segment, [1.0, -1.0], 1 - LN2)
    assert estimate_volume(body, SamplerConfig()) == pytest.approx(0.34657, abs=1e-5)


def test_level_set_volume_2d(triangle):
    y = np.array([1.0, -0.5, -0.5])
    body = TentLevelSet(triangle, y, 1 - LN2)
    # the level set is the triangle scaled about pole 0 by ln2 / 1.5
    true = 0.5 * (LN2 / 1.5) ** 2
    assert estimate_volume(body, SamplerConfig(delta=0.05)) == pytest.approx(true, rel=0.05)


@pytest.mark.parametrize("body,true", [(unit_cube(2), 1.0), (standard_simplex(2), 0.5)])
def test_multiphase_volume(body, true):
    cfg = SamplerConfig(delta=0.05, volume_backend="mc")
    est = volume_with_error(body, cfg, np.random.default_rng(1))
    assert est.backend == "mc"
    assert est.value == pytest.approx(true, rel=0.05)


# --- uniform sampling ----------------------------------------------------

def test_uniform_square_mean():
    rng = np.random.default_rng(2)
    cfg = SamplerConfig(walk_steps=20)
    P = np.array([uniform_sample(unit_cube(2), cfg, rng) for _ in range(2000)])
    sigma = np.sqrt(1 / 12 / len(P))
    assert np.all(np.abs(P.mean(axis=0) - 0.5) <= 3 * sigma)
    assert np.all((P >= 0) & (P <= 1))


def test_uniform_interval_mean(segment):
    rng = np.random.default_rng(3)
    body = TentLevelSet(segment, [1.0, -1.0], 1 - LN2)
    P = np.array([uniform_sample(body, SamplerConfig(), rng)[0] for _ in range(10_000)])
    L = LN2 / 2
    assert abs(P.mean() - L / 2) <= 3 * L / np.sqrt(12 * len(P))


def test_apex_level_is_stuck(segment, triangle):
    rng = np.random.default_rng(0)
    with pytest.raises(WalkStuck):
        uniform_sample(TentLevelSet(segment, [1.0, -1.0], 1.0), SamplerConfig(), rng)
    with pytest.raises(WalkStuck):
        uniform_sample(TentLevelSet(triangle, [1.0, -0.5, -0.5], 1.0), SamplerConfig(), rng)


def test_hit_and_run_stays_inside():
    rng = np.random.default_rng(4)
    body = standard_simplex(3)
    x = np.full(3, 0.1)
    for _ in range(50):
        x = hit_and_run(body, x, 5, rng)
        assert body.contains(x)


# --- decomposition -------------------------------------------------------

def test_level_count():
    assert level_count([0.0, 0.0]) == 1
    assert level_count([2.0, -2.0]) == 5
    assert level_count([1.0, -1.0]) == 3


def test_decomposition_uniform(segment):
    dec = build_decomposition(segment, [0.0, 0.0], SamplerConfig())
    assert dec.m == 1 and dec.levels == 1
    assert dec.volumes == pytest.approx([1.0])
    assert dec.weights == pytest.approx([1.0])


def test_decomposition_tent_example(segment):
    dec = build_decomposition(segment, [1.0, -1.0], SamplerConfig())
    assert dec.M == pytest.approx(np.e)
    assert dec.m == 3
    assert dec.volumes[0] == pytest.approx(LN2 / 2)
    assert dec.weights.sum() == pytest.approx(1.0, abs=1e-12)
    expected = np.array([2 ** -i * v for i, v in enumerate(dec.volumes, 1)])
    expected[-1] *= 2
    assert dec.c_tilde == pytest.approx(expected.sum())
    assert np.all(np.diff(dec.volumes) >= 0)


def test_decomposition_covers_hull():
    X = SampleSet([[0.0, 1.0]])
    dec = build_decomposition(X, [2.0, -2.0], SamplerConfig(delta=0.01))
    assert dec.m == 5
    # four nats of range need six ln2-levels to reach the whole segment,
    # unless the tail is provably negligible
    assert dec.levels >= 5
    assert dec.truncated or dec.levels == dec.cover_level


def test_decomposition_monotone_2d(triangle):
    cfg = SamplerConfig(delta=0.05)
    dec = build_decomposition(triangle, [1.5, -1.0, -0.5], cfg)
    slack = (1 + cfg.delta) ** 2
    assert np.all(dec.volumes[1:] * slack >= dec.volumes[:-1])
    assert dec.volumes[-1] == pytest.approx(0.5, rel=0.05)


def test_log_G_sandwich(segment):
    dec = build_decomposition(segment, [1.0, -1.0], SamplerConfig())
    for t in np.linspace(0, 1, 101):
        h = 1 - 2 * t
        G = np.exp(dec.log_G(h))
        assert G / 2 - 1e-12 <= np.exp(h) <= G + 1e-12


# --- rejection sampling --------------------------------------------------

def test_sample_tent_ks_and_acceptance(segment):
    rng = np.random.default_rng(5)
    cfg = SamplerConfig(delta=0.01)
    dec = build_decomposition(segment, [1.0, -1.0], cfg, rng)
    sampler = TentSampler(dec, cfg)
    Z = sampler.draw_many(4000, rng)[:, 0]
    assert stats.kstest(Z, tent_cdf).pvalue > 0.01
    p = 0.5
    assert sampler.acceptance_rate >= p - 3 * np.sqrt(p * (1 - p) / sampler.proposals)
    assert sampler.sandwich_violations == 0


def test_sample_tent_uniform(segment):
    rng = np.random.default_rng(6)
    Z = sample_tent(segment, [0.0, 0.0], SamplerConfig(), rng, size=4000)[:, 0]
    assert np.all((Z >= 0) & (Z <= 1))
    assert stats.kstest(Z, "uniform").pvalue > 0.01


def test_sample_tent_2d_inside_hull(triangle):
    rng = np.random.default_rng(7)
    cfg = SamplerConfig(delta=0.05, walk_steps=50)
    Z = sample_tent(triangle, [0.5, 0.0, -0.5], cfg, rng, size=50)
    assert np.all(Z >= -1e-9) and np.all(Z.sum(axis=1) <= 1 + 1e-9)


def test_retry_cap(segment):
    rng = np.random.default_rng(8)
    cfg = SamplerConfig(max_rounds=1)
    dec = build_decomposition(segment, [1.0, -1.0], cfg, rng)
    sampler = TentSampler(dec, cfg)
    with pytest.raises(RetryExhausted):
        for _ in range(200):
            sampler.draw(rng)


def test_reproducible_streams(segment):
    cfg = SamplerConfig(delta=0.01)
    a = sample_tent(segment, [1.0, -1.0], cfg, np.random.default_rng(42), size=50)
    b = sample_tent(segment, [1.0, -1.0], cfg, np.random.default_rng(42), size=50)
    assert np.array_equal(a, b)


# --- log partition -------------------------------------------------------

def test_alpha_trials():
    assert alpha_trials(0.01, 0.025) == int(np.ceil(np.log(80) / 2e-4))


def test_log_partition_requires_small_delta(segment):
    with pytest.raises(PreconditionError):
        estimate_log_partition(segment, [0.0, 0.0], SamplerConfig(delta=0.1))


def test_log_partition_uniform(segment):
    est = estimate_log_partition(segment, [0.0, 0.0], SamplerConfig(delta=0.02),
                                 np.random.default_rng(0))
    assert est.value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("estimator", ["ratio", "bernoulli"])
def test_log_partition_tent(segment, estimator):
    cfg = SamplerConfig(delta=0.02, alpha_estimator=estimator)
    est = estimate_log_partition(segment, [1.0, -1.0], cfg, np.random.default_rng(1))
    truth = exact_partition_1d([0.0, 1.0], [1.0, -1.0])
    assert truth == pytest.approx(0.16144, abs=1e-5)
    assert abs(est.value - truth) <= np.log(1 + 3 * cfg.delta)
    assert abs(np.exp(est.value - truth) - 1) <= est.rel_error


def test_log_partition_triangle(triangle):
    cfg = SamplerConfig(delta=0.05, seed=3)
    est = estimate_log_partition(triangle, np.zeros(3), cfg)
    assert abs(est.value - np.log(0.5)) <= np.log(1 + 3 * cfg.delta)
    assert exact_partition_2d(triangle, np.zeros(3)) == pytest.approx(np.log(0.5))
