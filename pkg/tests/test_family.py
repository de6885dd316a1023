import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pytest import approx, mark

import gisdesign as gd
from gisdesign.common.helpers import Streams
from gisdesign.settings import STREAM_STAGE1, STREAM_STAGE2


@mark.family
def test_density_call():
    std_normal = gd.gaussian_density((0.0, 1.0))
    assert std_normal([1.0]) == approx(-0.5)
    assert std_normal.label == (0.0, 1.0)


@mark.family
def test_density_nan_is_an_error():
    broken = gd.UnnormalizedDensity(lambda x: np.full(x.shape[0], np.nan), dim=1)
    with pytest.raises(gd.EvaluationError, match="NaN"):
        broken.log_weights(np.zeros((3, 1)))


@mark.family
def test_density_negative_infinity_is_allowed():
    half_line = gd.UnnormalizedDensity(lambda x: np.where(x[:, 0] >= 0, 0.0, -np.inf), dim=1)
    assert_array_equal(half_line.log_weights([[1.0], [-1.0]]), [0.0, -np.inf])


@mark.family
def test_density_dimension_mismatch():
    std_normal = gd.gaussian_density((0.0, 1.0))
    with pytest.raises(gd.InputError, match="coordinates"):
        std_normal([1.0, 2.0])


@mark.family
def test_chain_sample_is_read_only():
    chain = gd.ChainSample(np.arange(6.0), proposal_index=0, kind="iid", seed=1)
    assert chain.draws.shape == (6, 1)
    with pytest.raises(ValueError):
        chain.draws[0, 0] = 5.0


@mark.family
def test_chain_sample_too_short():
    with pytest.raises(gd.InputError, match="at least 2 rows"):
        gd.ChainSample([[1.0]], proposal_index=0, kind="iid", seed=1)


@mark.family
def test_chain_sample_relabel(gaussian_cache):
    chain = gaussian_cache.chain(STREAM_STAGE1, 4, 100)
    moved = chain.relabel(2)
    assert moved.proposal_index == 2
    assert moved.seed == chain.seed
    assert_array_equal(moved.draws, chain.draws)


@mark.family
class TestFamilyGrid:
    def test_points(self, gaussian_grid):
        assert len(gaussian_grid) == 9
        assert gaussian_grid.coordinate_names == ["mean", "sd"]
        assert gaussian_grid.state_dim == 1

    def test_duplicate_points(self):
        with pytest.raises(gd.InputError, match="distinct"):
            gd.GaussianFamily([[0.0, 1.0], [0.0, 1.0]])

    def test_scaled_points(self, gaussian_grid):
        scaled = gaussian_grid.scaled_points()
        assert scaled.min() == 0.0
        assert scaled.max() == 1.0
        assert_allclose(scaled[4], [0.5, 0.5])

    def test_constant_coordinate_scales_to_zero(self, line_grid):
        scaled = line_grid.scaled_points()
        assert_array_equal(scaled[:, 1], 0.0)
        assert scaled[0, 0] == 0.0
        assert scaled[-1, 0] == approx(1.0)

    def test_index_of(self, gaussian_grid):
        assert gaussian_grid.index_of([1.0, 1.5]) == 4
        assert gaussian_grid.index_of([2.0, 2.0 + 1e-12]) == 8

    def test_index_of_missing_point(self, gaussian_grid):
        with pytest.raises(gd.InputError, match="not on the grid"):
            gaussian_grid.index_of([0.5, 1.0])

    def test_density_is_cached(self, gaussian_grid):
        assert gaussian_grid.density(3) is gaussian_grid.density(3)

    def test_density_out_of_range(self, gaussian_grid):
        with pytest.raises(gd.InputError, match="out of range"):
            gaussian_grid.density(9)

    def test_sample_is_deterministic(self, gaussian_grid):
        first = gaussian_grid.sample(2, 50, seed=42)
        second = gaussian_grid.sample(2, 50, seed=42)
        assert_array_equal(first.draws, second.draws)
        assert first.kind == "iid"

    def test_grid_without_sampler(self):
        grid = gd.FamilyGrid([[0.0]], lambda p: gd.gaussian_density((p[0], 1.0)))
        with pytest.raises(gd.InputError, match="no sampler"):
            grid.sample(0, 10)


@mark.family
class TestSkeletonSet:
    def test_reference_first(self):
        skeleton = gd.SkeletonSet([3, 7, 1], reference=7)
        assert skeleton.indices == (7, 3, 1)
        assert skeleton.k == 3
        assert skeleton.sorted_indices() == (1, 3, 7)

    def test_duplicates(self):
        with pytest.raises(gd.InputError, match="distinct"):
            gd.SkeletonSet([1, 1])

    def test_reference_not_in_set(self):
        with pytest.raises(gd.InputError, match="not in the skeleton"):
            gd.SkeletonSet([1, 2], reference=5)

    def test_explicit_weights_follow_reordering(self):
        skeleton = gd.SkeletonSet([3, 5], reference=5, weights=[0.25, 0.75])
        assert skeleton.indices == (5, 3)
        assert_allclose(skeleton.weights, [0.75, 0.25])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            gd.SkeletonSet([3, 5], weights=[0.5, 0.6])

    def test_swap(self):
        skeleton = gd.SkeletonSet([0, 4, 8])
        swapped = skeleton.swap(4, 5)
        assert swapped.indices == (0, 5, 8)
        assert swapped.reference == 0
        assert skeleton.indices == (0, 4, 8)

    def test_swap_reference(self):
        with pytest.raises(gd.InputError, match="reference"):
            gd.SkeletonSet([0, 4]).swap(0, 5)

    def test_swap_into_member(self):
        with pytest.raises(gd.InputError, match="already"):
            gd.SkeletonSet([0, 4, 8]).swap(4, 8)

    def test_equality_ignores_order(self):
        assert gd.SkeletonSet([0, 4, 8]) == gd.SkeletonSet([0, 8, 4])
        assert hash(gd.SkeletonSet([0, 4, 8])) == hash(gd.SkeletonSet([0, 8, 4]))
        assert gd.SkeletonSet([0, 4, 8]) != gd.SkeletonSet([4, 0, 8])


@mark.family
class TestSampleBank:
    def test_sizes_and_weights(self, gaussian_bank):
        assert gaussian_bank.k == 3
        assert_array_equal(gaussian_bank.N_l, [4000, 4000, 4000])
        assert gaussian_bank.N == 12000
        assert gaussian_bank.n == 12000
        assert_allclose(gaussian_bank.a, [1 / 3, 1 / 3, 1 / 3])

    def test_weights_from_stage2_without_stage1(self, gaussian_cache):
        bank = gaussian_cache.bank(gd.SkeletonSet([0, 4]), stage1_size=0, stage2_size=100)
        assert bank.stage1 is None
        assert_allclose(bank.a, [0.5, 0.5])
        with pytest.raises(gd.InputError, match="no stage-1"):
            bank.N_l

    def test_log_phi_shapes(self, gaussian_bank):
        log_phi = gaussian_bank.stage2_log_phi
        assert len(log_phi) == 3
        assert log_phi[0].shape == (4000, 3)

    def test_shared_streams(self, gaussian_grid):
        skeleton = gd.SkeletonSet([0, 4])
        chains = [gaussian_grid.sample(i, 20, seed=7 + i, proposal_index=pos) for pos, i in enumerate(skeleton.indices)]
        with pytest.raises(gd.InputError, match="disjoint"):
            gd.SampleBank(skeleton, gaussian_grid.densities(skeleton.indices), stage1=chains, stage2=chains)

    def test_chain_count(self, gaussian_grid):
        skeleton = gd.SkeletonSet([0, 4])
        chains = [gaussian_grid.sample(0, 20, seed=1)]
        with pytest.raises(gd.InputError, match="1 chains"):
            gd.SampleBank(skeleton, gaussian_grid.densities(skeleton.indices), stage1=chains)

    def test_without_stage2(self, gaussian_bank):
        bank = gaussian_bank.without_stage2()
        assert bank.stage2 is None
        assert bank.N == gaussian_bank.N


@mark.family
def test_log_mixture_denominator():
    flat = gd.UnnormalizedDensity(lambda x: np.zeros(x.shape[0]), dim=1)
    assert gd.log_mixture_denominator([0.0], [flat, flat], [0.5, 0.5], [1.0, 2.0]) == approx(np.log(0.75))


@mark.family
def test_log_mixture_denominator_outside_support():
    empty = gd.UnnormalizedDensity(lambda x: np.full(x.shape[0], -np.inf), dim=1)
    assert gd.log_mixture_denominator([0.0], [empty], [1.0], [1.0]) == -np.inf


@mark.family
class TestSampleCache:
    def test_chain_is_reused(self, gaussian_cache):
        first = gaussian_cache.chain(STREAM_STAGE2, 1, 64)
        assert gaussian_cache.chain(STREAM_STAGE2, 1, 64) is first

    def test_same_seed_same_chain(self, gaussian_grid):
        config = gd.SamplerConfig(stage1_size=30, stage2_size=30, seed=9)
        first = gd.SampleCache(gaussian_grid, config).chain(STREAM_STAGE1, 5, 30)
        second = gd.SampleCache(gaussian_grid, config).chain(STREAM_STAGE1, 5, 30)
        assert_array_equal(first.draws, second.draws)
        assert first.seed == Streams.seed(9, STREAM_STAGE1, 5)

    def test_streams_differ(self, gaussian_cache):
        stage1 = gaussian_cache.chain(STREAM_STAGE1, 2, 64)
        stage2 = gaussian_cache.chain(STREAM_STAGE2, 2, 64)
        assert stage1.seed != stage2.seed
        assert not np.array_equal(stage1.draws, stage2.draws)

    def test_chain_independent_of_set(self, gaussian_cache):
        one = gaussian_cache.bank(gd.SkeletonSet([0, 4]))
        other = gaussian_cache.bank(gd.SkeletonSet([4, 8]))
        assert_array_equal(one.stage1[1].draws, other.stage1[0].draws)

    def test_threads_do_not_change_chains(self, gaussian_grid):
        serial = gd.SampleCache(gaussian_grid, gd.SamplerConfig(stage1_size=40, stage2_size=40, seed=2))
        parallel = gd.SampleCache(gaussian_grid, gd.SamplerConfig(stage1_size=40, stage2_size=40, seed=2, threads=3))
        skeleton = gd.SkeletonSet([1, 3, 6])
        for a, b in zip(serial.bank(skeleton).stage2, parallel.bank(skeleton).stage2):
            assert_array_equal(a.draws, b.draws)


@mark.family
def test_seed_derivation():
    assert Streams.seed(1, 2, 3) == Streams.seed(1, 2, 3)
    assert Streams.seed(1, 2, 3) != Streams.seed(1, 2, 4)
    assert Streams.seed(1, 2, 3) != Streams.seed(2, 2, 3)
    assert Streams.pair_slot(4, 1, 10) == Streams.pair_slot(1, 4, 10) == 14
