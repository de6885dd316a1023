import numpy as np
import pytest

import gisdesign as gd


def _standard_normal(point):
    return gd.gaussian_density((0.0, 1.0))


def _standard_normal_draws(point, size, burnin, rng):
    return rng.normal(size=size)[:, np.newaxis]


# Gaussian family
@pytest.fixture(scope="package")
def gaussian_grid():
    return gd.GaussianFamily.from_axes([0.0, 1.0, 2.0], [1.0, 1.5, 2.0])


@pytest.fixture(scope="module")
def gaussian_cache(gaussian_grid):
    return gd.SampleCache(gaussian_grid, gd.SamplerConfig(stage1_size=4000, stage2_size=4000, seed=11))


@pytest.fixture(scope="module")
def gaussian_skeleton():
    # points (0, 1), (1, 1.5) and (2, 2)
    return gd.SkeletonSet([0, 4, 8])


@pytest.fixture(scope="module")
def gaussian_bank(gaussian_cache, gaussian_skeleton):
    return gaussian_cache.bank(gaussian_skeleton)


@pytest.fixture(scope="module")
def gaussian_fit(gaussian_bank):
    return gd.fit_reverse_logistic(gaussian_bank)


@pytest.fixture(scope="module")
def line_grid():
    return gd.GaussianFamily.from_axes(np.arange(1, 201) / 10, [1.0])


# two grid points carrying the same density
@pytest.fixture(scope="package")
def twin_grid():
    return gd.FamilyGrid(
        [[0.0], [1.0]],
        _standard_normal,
        sampler=_standard_normal_draws,
        chain_kind="iid",
    )


@pytest.fixture(scope="module")
def twin_bank(twin_grid):
    cache = gd.SampleCache(twin_grid, gd.SamplerConfig(stage1_size=500, stage2_size=500, seed=3))
    return cache.bank(gd.SkeletonSet([0, 1]))


# Autologistic family
@pytest.fixture(scope="package")
def autologistic_grid():
    return gd.AutologisticFamily.from_axes([-1.0, 0.0, 1.0], [0.5], rows=3, cols=3)


@pytest.fixture(scope="class")
def _init_estimators(request, gaussian_grid, gaussian_bank, gaussian_cache) -> None:
    request.cls.grid = gaussian_grid
    request.cls.bank = gaussian_bank
    request.cls.est = gd.TwoStageEstimator(gaussian_grid, gaussian_bank)
    request.cls.est_known = gd.TwoStageEstimator(
        gaussian_grid, gaussian_bank, d=gaussian_grid.exact_ratios([0, 4, 8])
    )
    request.cls.est_single = gd.TwoStageEstimator(
        gaussian_grid, gaussian_cache.bank(gd.SkeletonSet([4]), stage1_size=0)
    )


@pytest.fixture(scope="class")
def _init_config_files(request, tmp_path_factory) -> None:
    folder = tmp_path_factory.mktemp("experiment")
    request.cls.folder = folder
    request.cls.config_sfe = folder / "sfe.cfg"
    request.cls.config_sfe.write_text(
        "\n".join(
            [
                "# gaussian space filling design",
                "model.family = gaussian",
                "grid.mean = 0:2:0.5",
                "grid.sd = 1, 1.5",
                "design.method = sfe",
                "design.k = 2",
                "design.reference = 0, 1",
                "budget.stage1 = 300",
                "budget.stage2 = 300",
                "seed = 5",
            ]
        )
    )
    request.cls.config_nis = folder / "nis.cfg"
    request.cls.config_nis.write_text(
        "\n".join(
            [
                "model.family = gaussian",
                "grid.mean = 0:2:0.5",
                "grid.sd = 1, 1.5",
                "design.method = nis",
                "design.reference = 1, 1",
                "budget.stage1 = 300",
                "budget.stage2 = 300",
                "estimate.function = identity",
                "seed = 5",
            ]
        )
    )
