"""
Replication checks against analytic and enumerated normalizers.
"""
import itertools
import math

import numpy as np
from pytest import approx, mark
from scipy.signal import lfilter

import gisdesign as gd


@mark.slow
def test_gaussian_normalizer_coverage(gaussian_grid):
    skeleton = gd.SkeletonSet([0, 4, 8])
    truth_d = gaussian_grid.exact_ratios(skeleton.indices)
    off = [i for i in range(len(gaussian_grid)) if i not in skeleton]
    truth_u = np.array([gaussian_grid.normalizer_ratio(i, 0) for i in off])
    d_hits = u_hits = 0
    replications = 100
    for seed in range(replications):
        cache = gd.SampleCache(gaussian_grid, gd.SamplerConfig(stage1_size=5000, stage2_size=5000, seed=seed))
        bank = cache.bank(skeleton)
        est = gd.TwoStageEstimator(gaussian_grid, bank)
        se_d = np.sqrt(np.diag(est.rlcov.V) / bank.N)
        d_hits += int(np.sum(np.abs(est.d_hat[1:] - truth_d[1:]) <= 3 * se_d))
        table = est.profile().loc[off]
        u = np.exp(table["log_u_hat"].to_numpy())
        u_hits += int(np.sum(np.abs(u - truth_u) <= 3 * table["se_u"].to_numpy()))
    assert d_hits >= 0.95 * replications * 2
    assert u_hits >= 0.9 * replications * len(off)


@mark.slow
def test_spectral_variance_calibration():
    rho, n, replications = 0.5, 2 ** 16, 50
    ar_hits = iid_hits = 0
    for seed in range(replications):
        rng = np.random.default_rng(1000 + seed)
        z = lfilter([1.0], [1.0, -rho], rng.normal(size=n) * math.sqrt(1 - rho ** 2))
        ar_hits += abs(gd.sv_matrix(z)[0, 0] / 3.0 - 1.0) <= 0.15
        iid = gd.sv_matrix(rng.normal(size=n))[0, 0]
        assert abs(iid - 1.0) < 0.35
        iid_hits += abs(iid - 1.0) <= 0.1
    assert ar_hits >= 0.9 * replications
    # single iid estimates have a relative sd near 7.7%, about 80% land within 10%
    assert iid_hits >= 0.7 * replications


_FIRST = [(0.0, 1.0), (-1.0, 0.5), (2.0, 1.5), (0.5, 2.0), (-2.0, 0.8)]
_SECOND = [(1.0, 1.0), (0.0, 0.7), (3.0, 1.2), (-1.5, 1.8), (0.2, 0.6)]


@mark.divergence
@mark.parametrize("first, second", list(itertools.product(_FIRST, _SECOND)))
def test_laplace_matches_gaussian_skld(first, second):
    (m1, s1), (m2, s2) = first, second
    exact = 0.5 * ((s1 / s2) ** 2 + (s2 / s1) ** 2 - 2 + (m1 - m2) ** 2 * (1 / s1 ** 2 + 1 / s2 ** 2))
    assert gd.skld_laplace(gd.gaussian_density(first), gd.gaussian_density(second)) == approx(exact, rel=1e-6)


@mark.slow
def test_autologistic_against_enumeration():
    grid = gd.AutologisticFamily.from_axes([-4.0, -2.0, 0.0, 2.0, 4.0], [0.5], rows=3, cols=3)
    truth = np.exp([grid.exact_log_ratio(i, 2) for i in range(len(grid))])
    hits = 0
    seeds = range(4)
    for seed in seeds:
        cache = gd.SampleCache(grid, gd.SamplerConfig(stage1_size=5000, stage2_size=5000, seed=seed))
        selected = gd.select_mnx(grid, 3, 2, i_max=30, cache=cache).skeleton
        assert selected.k == 3
        assert selected.reference == 2
        table = gd.TwoStageEstimator(grid, cache.bank(selected)).profile()
        u = np.exp(table["log_u_hat"].to_numpy())
        hits += int(np.sum(np.abs(u - truth) <= 3 * table["se_u"].to_numpy()))
    assert hits >= 0.9 * len(seeds) * len(grid)


@mark.slow
def test_minimax_design_beats_single_proposal():
    grid = gd.AutologisticFamily.from_axes(np.linspace(-4.0, 4.0, 21), [0.5], rows=10, cols=10)
    budget, reference = 30000, 10
    cache = gd.SampleCache(grid, gd.SamplerConfig(stage1_size=5000, stage2_size=5000, seed=7))

    nis = gd.select_nis(grid, reference).skeleton
    nis_bank = cache.bank(nis, stage1_size=0, stage2_size=budget)
    nis_max = gd.TwoStageEstimator(grid, nis_bank).profile()["rel_se"].max()

    mnx = gd.select_mnx(grid, 3, reference, budget=budget, i_max=60, cache=cache)
    stage1, stage2 = max(mnx.split.stage1 // 3, 2), mnx.split.stage2 // 3
    mnx_bank = cache.bank(mnx.skeleton, stage1_size=stage1, stage2_size=stage2)
    mnx_max = gd.TwoStageEstimator(grid, mnx_bank).profile()["rel_se"].max()

    assert mnx_max <= 0.5 * nis_max
