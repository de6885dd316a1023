"""
Skeleton selection methods and the stage-1/stage-2 sample split.

nis   the reference alone
sfe   point swap on scaled Euclidean distances between grid points
sfs   point swap on symmetric KL divergences
seq   sequential addition of the worst covered target
mnx   simulated annealing on the minimax relative SE
ent   simulated annealing on -log det of the reverse logistic covariance
"""
import logging
import math
import time
from typing import Optional, Sequence

import numpy as np

from ..common.validators import validate_choice, validate_integer
from ..divergence import pairwise_divergence_matrix
from ..estimator import TwoStageEstimator
from ..exceptions import InputError
from ..family import FamilyGrid, SkeletonSet
from ..gis import Function
from ..mcse import LagWindow
from ..sampling import SampleCache
from ..settings import (
    SamplerConfig,
    Split,
    default_p,
    default_p_tilde,
    default_t0,
    default_b,
    default_i_max,
    default_skld_size,
)
from .criteria import EntropyCriterion, MinimaxCriterion, OBJECTIVES, split_grid, split_objective
from .search import SelectionResult, point_swap, simulated_annealing

logger = logging.getLogger(__name__)

METHODS = ("nis", "sfe", "sfs", "seq", "mnx", "ent")
SFS_DISTANCES = ("mc", "laplace")


def _fixed_with_reference(grid: FamilyGrid, reference: Optional[int], fixed: Sequence[int]) -> list:
    fixed = [int(i) for i in fixed]
    if reference is None:
        return fixed
    reference = int(reference)
    if not 0 <= reference < len(grid):
        raise InputError(f"reference index {reference} is outside the grid")
    return [reference] + [i for i in fixed if i != reference]


def select_nis(grid: FamilyGrid, reference: int) -> SelectionResult:
    """Single-proposal importance sampling: the skeleton is the reference alone."""
    fixed = _fixed_with_reference(grid, reference, ())
    return SelectionResult(SkeletonSet(fixed), math.nan, [], method="nis")


def select_sfe(
    grid: FamilyGrid,
    k: int,
    fixed: Sequence[int] = (),
    p: float = default_p,
    p_tilde: float = default_p_tilde,
    reference: Optional[int] = None,
) -> SelectionResult:
    """
    Space-filling selection on Euclidean distances, every parameter coordinate scaled to [0, 1].

    Examples
    --------
    >>> import gisdesign as gd
    >>> grid = gd.GaussianFamily.from_axes(np.arange(1, 201) / 10, [1.0])
    >>> gd.select_sfe(grid, 5, reference=99).skeleton.sorted_indices()
    (19, 59, 99, 139, 179)
    """
    fixed = _fixed_with_reference(grid, reference, fixed)
    dist = pairwise_divergence_matrix(grid, "euclidean")
    result = point_swap(grid, k, dist, fixed, p, p_tilde)
    result.method = "sfe"
    return result


def select_sfs(
    grid: FamilyGrid,
    k: int,
    fixed: Sequence[int] = (),
    config: SamplerConfig = SamplerConfig(),
    distance: str = "mc",
    skld_size: int = default_skld_size,
    p: float = default_p,
    p_tilde: float = default_p_tilde,
    reference: Optional[int] = None,
) -> SelectionResult:
    """
    Space-filling selection on symmetric KL divergences between grid densities.

    Monte Carlo divergences can be slightly negative for nearly identical densities;
    they are set to 0 before the coverage criterion is evaluated.

    Parameters
    ----------
    distance : {'mc', 'laplace'}, default 'mc'
        Monte Carlo SKLD from `skld_size` draws per grid point, or the Laplace approximation
        (continuous families only).
    """
    validate_choice("distance", distance, SFS_DISTANCES)
    fixed = _fixed_with_reference(grid, reference, fixed)
    dist = pairwise_divergence_matrix(grid, distance, config, skld_size=skld_size)
    negative = dist < 0
    if negative.any():
        logger.warning(f"{int(negative.sum()) // 2} negative divergences set to 0 (most negative {dist.min():.3g})")
        dist = np.where(negative, 0.0, dist)
    result = point_swap(grid, k, dist, fixed, p, p_tilde)
    result.method = "sfs"
    return result


def _worst_target(values: np.ndarray, excluded: Sequence[int]) -> Optional[int]:
    """Index of the largest value outside `excluded`; NaN counts as +inf; ties go to the first index."""
    scores = np.where(np.isnan(values), np.inf, values).astype(float)
    scores[list(excluded)] = -np.inf
    if np.all(np.isneginf(scores)):
        return None
    return int(np.argmax(scores))


def _profile_scores(est: TwoStageEstimator, objective: str, f: Optional[Function]) -> np.ndarray:
    if objective == "eta":
        table = est.profile(f)
        return (table["se_eta"] / table["eta_hat"].abs()).to_numpy(dtype=float)
    return est.profile()["rel_se"].to_numpy(dtype=float)


def select_seq(
    grid: FamilyGrid,
    k: int,
    reference: int,
    config: SamplerConfig = SamplerConfig(),
    window: Optional[LagWindow] = None,
    objective: str = "u",
    f: Optional[Function] = None,
    cache: Optional[SampleCache] = None,
) -> SelectionResult:
    """
    Sequential selection.

    Starts from the reference. At every step the chains of the current set are drawn (the
    config stage-1 and stage-2 sizes per proposal), d is refitted, and the grid point with the
    largest relative SE among the points outside the set joins it. A target with u_hat = 0
    counts as the worst covered one.

    Parameters
    ----------
    objective : {'u', 'eta'}, default 'u'
        Relative SE of u_hat, or se(eta_hat) / |eta_hat| for the function `f`.

    cache : SampleCache, optional
        Chain cache to draw from; a new one is built from `config` by default.
    """
    validate_integer("k", k, min_value=1, max_value=len(grid))
    validate_choice("objective", objective, OBJECTIVES)
    if objective == "eta" and f is None:
        raise InputError("objective 'eta' needs a function f")
    cache = SampleCache(grid, config) if cache is None else cache
    indices = _fixed_with_reference(grid, reference, ())
    trace = []
    start = time.time()
    while True:
        skeleton = SkeletonSet(indices)
        bank = cache.bank(skeleton, stage1_size=None if skeleton.k > 1 else 0)
        est = TwoStageEstimator(grid, bank, window, threads=cache.config.threads)
        scores = _profile_scores(est, objective, f)
        worst = float(np.nanmax(np.where(np.isnan(scores), np.inf, scores)))
        trace.append((len(trace), worst, worst))
        if skeleton.k == k:
            break
        added = _worst_target(scores, indices)
        if added is None:
            break
        logger.info(f"sequential step {skeleton.k}: adding grid point {added} (score {scores[added]:.4g})")
        indices.append(added)
    logger.info(f"sequential selection of {k} points in {time.time() - start:.2f} sec")
    return SelectionResult(skeleton, worst, trace, method="seq", samples_used=bank)


def _annealing_start(grid: FamilyGrid, k: int, fixed: list, start: Optional[SkeletonSet]) -> SkeletonSet:
    if start is not None:
        return start
    return select_sfe(grid, k, fixed).skeleton


def select_mnx(
    grid: FamilyGrid,
    k: int,
    reference: int,
    budget: Optional[int] = None,
    config: SamplerConfig = SamplerConfig(),
    window: Optional[LagWindow] = None,
    t0: float = default_t0,
    b: int = default_b,
    i_max: int = default_i_max,
    seed: Optional[int] = None,
    objective: str = "u",
    f: Optional[Function] = None,
    fixed: Sequence[int] = (),
    start: Optional[SkeletonSet] = None,
    cache: Optional[SampleCache] = None,
) -> SelectionResult:
    """
    Minimax selection: simulated annealing on max over the grid of the relative SE, at the best
    stage-1/stage-2 split of the total budget.

    Parameters
    ----------
    budget : int, optional
        Total number of draws M over both stages. Default k * (stage1_size + stage2_size).

    seed : int, optional
        Seed of the annealing moves. Default is the config master seed.

    start : SkeletonSet, optional
        Initial set of the annealing. Default is the SFE set with the same fixed points.

    Returns
    -------
    SelectionResult
        `split` holds the minimizing (N, n) for the selected set; `samples_used` its chains.
    """
    fixed = _fixed_with_reference(grid, reference, fixed)
    cache = SampleCache(grid, config) if cache is None else cache
    criterion = MinimaxCriterion(cache, budget, window, objective, f)
    seed = cache.config.seed if seed is None else seed
    initial = _annealing_start(grid, k, fixed, start)
    result = simulated_annealing(grid, k, criterion, fixed, t0, b, i_max, seed, initial)
    result.method = "mnx"
    best = result.skeleton
    split = criterion.splits.get(best)
    result.split = None if split is None else Split(*split)
    result.samples_used = cache.bank(best, stage1_size=None if best.k > 1 else 0)
    if result.split is not None:
        logger.info(f"minimax split for the selected set: N = {result.split.stage1}, n = {result.split.stage2}")
    return result


def select_ent(
    grid: FamilyGrid,
    k: int,
    reference: int,
    config: SamplerConfig = SamplerConfig(),
    window: Optional[LagWindow] = None,
    t0: float = default_t0,
    b: int = default_b,
    i_max: int = default_i_max,
    seed: Optional[int] = None,
    scaled: bool = True,
    fixed: Sequence[int] = (),
    start: Optional[SkeletonSet] = None,
    cache: Optional[SampleCache] = None,
) -> SelectionResult:
    """
    Maximum entropy selection: simulated annealing on -log det of the covariance of d_hat,
    each candidate scored from stage-1 chains only.

    ``scaled=True`` divides V_ij by d_i d_j; ``scaled=False`` uses V itself.
    """
    fixed = _fixed_with_reference(grid, reference, fixed)
    cache = SampleCache(grid, config) if cache is None else cache
    criterion = EntropyCriterion(cache, window, scaled)
    seed = cache.config.seed if seed is None else seed
    initial = _annealing_start(grid, k, fixed, start)
    result = simulated_annealing(grid, k, criterion, fixed, t0, b, i_max, seed, initial)
    result.method = "ent"
    if result.skeleton.k > 1:
        result.samples_used = cache.bank(result.skeleton, stage2_size=0)
    return result


def optimal_split(
    budget: int,
    v1,
    v2,
    u,
    k: int = 1,
    min_stage1: Optional[int] = None,
    max_stage1: Optional[int] = None,
    step: Optional[int] = None,
) -> Split:
    """
    Stage-1 total N minimizing max over targets of RelSE(N, M - N), by exhaustive scan.

    Parameters
    ----------
    budget : int
        Total number of draws M; at least 2k.

    v1, v2, u : array_like
        Per-target stage-1 and stage-2 standard deviation terms and u_hat.

    k : int, default 1
        Number of proposals. Candidate N run over k, 2k, ..., M - k.

    min_stage1, max_stage1 : int, optional
        Restrict the candidates.

    step : int, optional
        Candidate spacing. Default k.

    Returns
    -------
    Split
        (stage1, stage2) with stage1 + stage2 = M. Ties go to the smallest N.

    Examples
    --------
    >>> gd.optimal_split(100, [0.0, 0.0], [1.0, 2.0], [1.0, 1.0])
    Split(stage1=1, stage2=99)
    """
    candidates = split_grid(budget, k, min_stage1, max_stage1, step)
    objective = split_objective(candidates, budget, v1, v2, u)
    best = int(candidates[int(np.argmin(objective))])
    logger.debug(f"split objective {objective.min():.6g} at N = {best}")
    return Split(best, int(budget) - best)


def select(method: str, grid: FamilyGrid, k: int, reference: int, **options) -> SelectionResult:
    """
    Run the selection `method` with the keyword options it accepts.
    """
    validate_choice("method", method, METHODS)
    if method == "nis":
        if k != 1:
            logger.info(f"nis ignores k = {k}; the skeleton is the reference alone")
        return select_nis(grid, reference)
    functions = {
        "sfe": select_sfe,
        "sfs": select_sfs,
        "seq": select_seq,
        "mnx": select_mnx,
        "ent": select_ent,
    }
    fn = functions[method]
    if method in ("sfe", "sfs"):
        options["reference"] = reference
        return fn(grid, k, **options)
    return fn(grid, k, reference, **options)
