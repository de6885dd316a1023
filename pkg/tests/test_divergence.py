import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pytest import approx, mark
from scipy.spatial.distance import cdist

import gisdesign as gd


def gaussian_skld(first, second):
    (m1, s1), (m2, s2) = first, second
    return 0.5 * ((s1 / s2) ** 2 + (s2 / s1) ** 2 - 2 + (m1 - m2) ** 2 * (1 / s1 ** 2 + 1 / s2 ** 2))


@mark.divergence
@mark.parametrize(
    "first, second",
    [
        ((0.0, 1.0), (1.0, 2.0)),
        ((-1.0, 0.5), (2.0, 1.5)),
        ((3.0, 2.0), (0.0, 1.0)),
    ],
)
def test_laplace_is_exact_for_gaussians(first, second):
    value = gd.skld_laplace(gd.gaussian_density(first), gd.gaussian_density(second))
    assert value == approx(gaussian_skld(first, second), rel=1e-6)


@mark.divergence
def test_laplace_same_density():
    density = gd.gaussian_density((0.5, 1.0))
    assert gd.skld_laplace(density, density) == approx(0.0, abs=1e-6)


@mark.divergence
def test_laplace_first_order():
    # J = 1/2 - x: the first order term already gives the exact value 1
    first, second = gd.gaussian_density((0.0, 1.0)), gd.gaussian_density((1.0, 1.0))
    assert gd.skld_laplace(first, second, order="first") == approx(1.0, abs=1e-6)


@mark.divergence
def test_laplace_needs_continuous_support(autologistic_grid):
    with pytest.raises(gd.InputError, match="continuous support"):
        gd.skld_laplace(autologistic_grid.density(0), autologistic_grid.density(1))


@mark.divergence
def test_find_mode():
    assert_allclose(gd.find_mode(gd.gaussian_density((2.5, 0.7))), [2.5], atol=1e-6)


@mark.divergence
def test_find_mode_outside_support():
    half_line = gd.UnnormalizedDensity(lambda x: np.where(x[:, 0] > 1, -x[:, 0], -np.inf), dim=1)
    with pytest.raises(gd.OptimizationError, match="not finite at the starting point"):
        gd.find_mode(half_line)


@mark.divergence
class TestMonteCarlo:
    def test_close_to_exact(self, gaussian_grid):
        first, second = gaussian_grid.density(0), gaussian_grid.density(3)
        s1 = gaussian_grid.sample(0, 20000, seed=1)
        s2 = gaussian_grid.sample(3, 20000, seed=2)
        assert gd.skld_mc(first, second, s1, s2) == approx(gaussian_skld((0.0, 1.0), (1.0, 1.0)), abs=0.06)

    def test_same_density(self, gaussian_grid):
        density = gaussian_grid.density(4)
        chain = gaussian_grid.sample(4, 100, seed=3)
        assert gd.skld_mc(density, density, chain, chain) == 0.0

    def test_close_densities_within_error(self):
        grid = gd.GaussianFamily.from_axes([0.0, 0.01], [1.0])
        first, second = grid.density(0), grid.density(1)
        for seed in range(10):
            s1 = grid.sample(0, 2000, seed=2 * seed)
            s2 = grid.sample(1, 2000, seed=2 * seed + 1)
            se = gd.skld_mc_se(first, second, s1, s2)
            assert 0 < se < 1e-3
            assert gd.skld_mc(first, second, s1, s2) >= -5 * se

    def test_support_error(self):
        half_line = gd.UnnormalizedDensity(lambda x: np.where(x[:, 0] >= 0, -x[:, 0], -np.inf), dim=1)
        normal = gd.gaussian_density((0.0, 1.0))
        chain = gd.ChainSample([[-1.0], [0.5], [1.0]], proposal_index=0, kind="iid", seed=1)
        with pytest.raises(gd.SupportError, match="undefined"):
            gd.skld_mc(normal, half_line, chain, chain)


@mark.divergence
class TestPairwise:
    def test_euclidean(self, gaussian_grid):
        dist = gd.pairwise_divergence_matrix(gaussian_grid, "euclidean")
        scaled = gaussian_grid.scaled_points()
        assert_allclose(dist, cdist(scaled, scaled))
        assert_array_equal(np.diag(dist), 0.0)

    def test_laplace(self):
        grid = gd.GaussianFamily([[0.0, 1.0], [1.0, 2.0], [-1.0, 0.5]])
        dist = gd.pairwise_divergence_matrix(grid, "laplace")
        points = [tuple(p) for p in grid.points]
        expected = np.array([[gaussian_skld(p, q) for q in points] for p in points])
        assert_allclose(dist, expected, rtol=1e-6, atol=1e-9)

    def test_monte_carlo(self, gaussian_grid):
        config = gd.SamplerConfig(seed=8)
        dist = gd.pairwise_divergence_matrix(gaussian_grid, "mc", config, skld_size=500)
        assert dist.shape == (9, 9)
        assert_allclose(dist, dist.T)
        assert_array_equal(np.diag(dist), 0.0)
        again = gd.pairwise_divergence_matrix(gaussian_grid, "mc", config, skld_size=500)
        assert_array_equal(dist, again)

    def test_monte_carlo_threads(self, gaussian_grid):
        serial = gd.pairwise_divergence_matrix(gaussian_grid, "mc", gd.SamplerConfig(seed=8), skld_size=200)
        parallel = gd.pairwise_divergence_matrix(gaussian_grid, "mc", gd.SamplerConfig(seed=8, threads=4), skld_size=200)
        assert_array_equal(serial, parallel)

    def test_per_pair_chains(self, gaussian_grid):
        dist = gd.pairwise_divergence_matrix(gaussian_grid, "mc", gd.SamplerConfig(seed=8), skld_size=200, per_pair=True)
        assert_allclose(dist, dist.T)

    def test_unknown_method(self, gaussian_grid):
        with pytest.raises(ValueError, match="should be one of"):
            gd.pairwise_divergence_matrix(gaussian_grid, "hellinger")
