import numpy as np
import pytest
from numpy.testing import assert_array_equal
from pytest import approx, mark

import gisdesign as gd
from gisdesign.gis import check_ratios, evaluate_function


def _box_bank():
    box = gd.UnnormalizedDensity(lambda x: np.where((x[:, 0] >= 0) & (x[:, 0] <= 1), 0.0, -np.inf), dim=1)
    chain = gd.ChainSample([[0.2], [0.5], [2.0], [0.7]], proposal_index=0, kind="iid", seed=1)
    return gd.SampleBank(gd.SkeletonSet([0]), [box], stage2=[chain])


@mark.gis
@mark.smoke
def test_self_proposal_weights_are_one(gaussian_cache):
    bank = gaussian_cache.bank(gd.SkeletonSet([4]), stage1_size=0)
    weights = gd.is_weights(bank.densities[0], bank, d=[1.0])
    assert_array_equal(weights.u[0], 1.0)
    assert weights.v is None
    assert gd.u_hat(bank.densities[0], bank, [1.0]) == 1.0


@mark.gis
def test_eta_of_constant_function(gaussian_grid, gaussian_bank):
    d = gaussian_grid.exact_ratios([0, 4, 8])
    one = lambda x: np.ones(x.shape[0])
    for index in (1, 5, 7):
        assert gd.eta_hat(one, gaussian_grid.density(index), gaussian_bank, d) == approx(1.0, rel=1e-12)


@mark.gis
@mark.parametrize("index", [0, 2, 4, 6, 8])
def test_u_hat_known_ratios(gaussian_grid, gaussian_bank, index):
    d = gaussian_grid.exact_ratios([0, 4, 8])
    expected = gaussian_grid.normalizer_ratio(index, 0)
    assert gd.u_hat(gaussian_grid.density(index), gaussian_bank, d) == approx(expected, rel=0.05)


@mark.gis
@mark.parametrize("index, mean", [(1, 0.0), (4, 1.0), (7, 2.0)])
def test_eta_hat_mean(gaussian_grid, gaussian_bank, index, mean):
    d = gaussian_grid.exact_ratios([0, 4, 8])
    identity = lambda x: x[:, 0]
    assert gd.eta_hat(identity, gaussian_grid.density(index), gaussian_bank, d) == approx(mean, abs=0.1)


@mark.gis
def test_v_hat_is_eta_times_u(gaussian_grid, gaussian_bank):
    d = gaussian_grid.exact_ratios([0, 4, 8])
    target = gaussian_grid.density(5)
    square = lambda x: x[:, 0] ** 2
    v = gd.v_hat(square, target, gaussian_bank, d)
    u = gd.u_hat(target, gaussian_bank, d)
    assert gd.eta_hat(square, target, gaussian_bank, d) == approx(v / u, rel=1e-12)


@mark.gis
def test_target_outside_mixture_support():
    bank = _box_bank()
    with pytest.raises(gd.SupportError, match="proposal mixture is zero"):
        gd.is_weights(gd.gaussian_density((0.0, 1.0)), bank, [1.0])


@mark.gis
def test_zero_target_is_degenerate():
    bank = _box_bank()
    nowhere = gd.UnnormalizedDensity(lambda x: np.full(x.shape[0], -np.inf), dim=1)
    assert gd.u_hat(nowhere, bank, [1.0]) == 0.0
    with pytest.raises(gd.DegenerateEstimatorError, match="zero"):
        gd.eta_hat(lambda x: x[:, 0], nowhere, bank, [1.0])


@mark.gis
def test_stage2_is_required(gaussian_cache):
    bank = gaussian_cache.bank(gd.SkeletonSet([0, 4]), stage2_size=0)
    with pytest.raises(gd.InputError, match="stage-2"):
        gd.is_weights(bank.densities[0], bank, [1.0, 1.5])


@mark.gis
@mark.parametrize(
    "d, k, message",
    [
        ([1.0, 2.0], 3, "length 3"),
        ([2.0, 1.0], 2, "d_1 must be 1"),
        ([1.0, -1.0], 2, "positive"),
        ([1.0, np.inf], 2, "positive"),
    ],
)
def test_check_ratios(d, k, message):
    with pytest.raises(gd.InputError, match=message):
        check_ratios(d, k)


@mark.gis
def test_function_must_be_finite():
    with pytest.raises(gd.EvaluationError, match="not finite"):
        evaluate_function(lambda x: np.log(x[:, 0]), np.array([[1.0], [-1.0]]))
