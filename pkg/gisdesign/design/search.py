"""
Combinatorial searches over k-subsets of a grid: greedy point swapping and simulated annealing.
"""
import logging
import math
import time
from typing import Optional, Sequence, List, Tuple

import numpy as np
import pandas as pd

from ..common.helpers import Streams
from ..common.validators import validate_integer, validate_real
from ..exceptions import InputError
from ..family import FamilyGrid, SkeletonSet, SampleBank
from ..settings import default_p, default_p_tilde, default_t0, default_b, default_i_max, STREAM_ANNEALING
from .criteria import DesignCriterion, CoverageCriterion

logger = logging.getLogger(__name__)


class SelectionResult:
    """
    Outcome of a skeleton selection.

    Parameters
    ----------
    skeleton : SkeletonSet
        Selected set; the reference is first.

    criterion_value : float
        Criterion of the selected set (NaN for methods without a criterion).

    trace : list of (iteration, value, best)
        Criterion of the current set and the best value so far after each iteration.

    method : str
        Selection method.

    samples_used : SampleBank, optional
        Chains of the selected set, for reuse by the estimation phase.

    split : tuple of int, optional
        Stage-1 and stage-2 totals that minimize the minimax criterion of the selected set.
    """

    def __init__(
        self,
        skeleton: SkeletonSet,
        criterion_value: float,
        trace: List[Tuple[int, float, float]],
        method: str,
        samples_used: Optional[SampleBank] = None,
        split: Optional[Tuple[int, int]] = None,
    ):
        self.skeleton = skeleton
        self.criterion_value = criterion_value
        self.trace = list(trace)
        self.method = method
        self.samples_used = samples_used
        self.split = split

    def __repr__(self):
        dic = {
            "method": self.method,
            "skeleton": self.skeleton.indices,
            "criterion": self.criterion_value,
            "iterations": len(self.trace) - 1 if self.trace else 0,
        }
        return repr(pd.Series(dic))

    @property
    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.trace, columns=["iteration", "value", "best"])


def _check_size(grid: FamilyGrid, k: int, fixed: Sequence[int]) -> List[int]:
    validate_integer("k", k, min_value=1, max_value=len(grid))
    fixed = list(dict.fromkeys(int(i) for i in fixed))
    for i in fixed:
        if not 0 <= i < len(grid):
            raise InputError(f"fixed index {i} is outside the grid")
    if len(fixed) > k:
        raise InputError(f"{len(fixed)} fixed points do not fit in a skeleton of size {k}")
    return fixed


def initial_skeleton(grid: FamilyGrid, k: int, fixed: Sequence[int] = (), reference: Optional[int] = None) -> SkeletonSet:
    """
    The fixed points plus free points spread evenly over the remaining grid order.
    """
    fixed = _check_size(grid, k, fixed)
    if reference is not None and reference not in fixed:
        fixed = [reference] + fixed
        if len(fixed) > k:
            raise InputError("the reference and the fixed points do not fit in the skeleton")
    free = [i for i in range(len(grid)) if i not in fixed]
    need = k - len(fixed)
    if need:
        positions = np.round(np.linspace(0, len(free) - 1, need)).astype(int)
        chosen = [free[p] for p in positions]
    else:
        chosen = []
    indices = fixed + chosen
    return SkeletonSet(indices, reference=indices[0] if reference is None else reference)


def point_swap(
    grid: FamilyGrid,
    k: int,
    dist,
    fixed: Sequence[int] = (),
    p: float = default_p,
    p_tilde: float = default_p_tilde,
    start: Optional[SkeletonSet] = None,
    criterion: Optional[DesignCriterion] = None,
) -> SelectionResult:
    """
    Greedy point swapping.

    Each pass visits every free member of the current set in turn and swaps it with the
    outside point giving the largest drop of the criterion, if any. Stops after a pass without
    a swap. Fixed points and the reference never leave the set.

    Parameters
    ----------
    grid : FamilyGrid
        Candidate points.

    k : int
        Skeleton size.

    dist : array_like
        |Xi| x |Xi| distances for the coverage criterion.

    fixed : sequence of int, default ()
        Grid indices that must be selected. The first one is the reference.

    p, p_tilde : float
        Coverage criterion exponents.

    start : SkeletonSet, optional
        Initial set; default spreads the free points evenly over the grid order.

    criterion : DesignCriterion, optional
        Replaces the coverage criterion built from `dist`.

    Examples
    --------
    >>> import gisdesign as gd
    >>> grid = gd.GaussianFamily.from_axes(np.arange(1, 201) / 10, [1.0])
    >>> dist = gd.pairwise_divergence_matrix(grid, "euclidean")
    >>> gd.point_swap(grid, 5, dist, fixed=[99]).skeleton.sorted_indices()
    (19, 59, 99, 139, 179)
    """
    fixed = _check_size(grid, k, fixed)
    criterion = CoverageCriterion(dist, p, p_tilde) if criterion is None else criterion
    current = initial_skeleton(grid, k, fixed) if start is None else start
    if current.k != k:
        raise InputError(f"start set has {current.k} points, expected {k}")
    if not set(fixed) <= set(current.indices):
        raise InputError("the start set must contain the fixed points")
    locked = set(fixed) | {current.reference}
    value = criterion(current)
    trace = [(0, value, value)]
    passes = 0
    changed = True
    while changed:
        changed = False
        passes += 1
        for member in [i for i in current.indices if i not in locked]:
            if member not in current:
                continue
            best_value, best_set = value, None
            for candidate in range(len(grid)):
                if candidate in current:
                    continue
                trial = current.swap(member, candidate)
                trial_value = criterion(trial)
                if trial_value < best_value:
                    best_value, best_set = trial_value, trial
            if best_set is not None:
                current, value = best_set, best_value
                changed = True
                trace.append((len(trace), value, value))
        logger.info(f"point swap pass {passes}: criterion {value:.6g}")
    return SelectionResult(current, value, trace, method="point-swap")


def annealing_temperature(i: int, t0: float = default_t0, b: int = default_b) -> float:
    """
    T = T0 / log(floor((i - 1) / B) B + e) at iteration i >= 1.

    Examples
    --------
    >>> annealing_temperature(1, 10.0, 10)
    10.0
    """
    validate_integer("i", i, min_value=1)
    return t0 / math.log(((i - 1) // b) * b + math.e)


def simulated_annealing(
    grid: FamilyGrid,
    k: int,
    criterion: DesignCriterion,
    fixed: Sequence[int] = (),
    t0: float = default_t0,
    b: int = default_b,
    i_max: int = default_i_max,
    seed: int = 0,
    start: Optional[SkeletonSet] = None,
) -> SelectionResult:
    """
    Simulated annealing over k-subsets containing the fixed points.

    At iteration i a random free member is swapped with a random outside point; the candidate
    is accepted with probability min(1, exp((value - candidate value) / T)). Returns the best set
    visited. Deterministic given `seed`.

    Parameters
    ----------
    grid : FamilyGrid
        Candidate points.

    k : int
        Skeleton size.

    criterion : DesignCriterion
        Criterion to minimize.

    fixed : sequence of int, default ()
        Grid indices that stay in the set; the first one is the reference unless `start` says otherwise.

    t0 : float, default 10
        Initial temperature.

    b : int, default 10
        Iterations per temperature level.

    i_max : int, default 250
        Number of iterations.

    seed : int, default 0
        Master seed of the move stream.

    start : SkeletonSet, optional
        Initial set.
    """
    validate_real("t0", t0, min_value=0.0, inclusive=False)
    validate_integer("b", b, min_value=1)
    validate_integer("i_max", i_max, min_value=1)
    fixed = _check_size(grid, k, fixed)
    current = initial_skeleton(grid, k, fixed) if start is None else start
    if current.k != k:
        raise InputError(f"start set has {current.k} points, expected {k}")
    if not set(fixed) <= set(current.indices):
        raise InputError("the start set must contain the fixed points")
    locked = set(fixed) | {current.reference}
    rng = Streams.generator(Streams.seed(seed, STREAM_ANNEALING, 0))

    start_time = time.time()
    value = criterion(current)
    best, best_value = current, value
    trace = [(0, value, best_value)]
    accepted = 0
    for i in range(1, i_max + 1):
        movable = [j for j in current.indices if j not in locked]
        outside = [j for j in range(len(grid)) if j not in current]
        if not movable or not outside:
            logger.info("no swap is possible; annealing keeps the start set")
            break
        temperature = annealing_temperature(i, t0, b)
        member = movable[int(rng.integers(len(movable)))]
        candidate_index = outside[int(rng.integers(len(outside)))]
        uniform = rng.random()
        candidate = current.swap(member, candidate_index)
        candidate_value = criterion(candidate)
        if candidate_value <= value:
            accept = True
        elif math.isinf(candidate_value):
            accept = False
        else:
            accept = uniform < math.exp((value - candidate_value) / temperature)
        if accept:
            current, value = candidate, candidate_value
            accepted += 1
            if value < best_value:
                best, best_value = current, value
        trace.append((i, value, best_value))
        logger.debug(f"iteration {i}: T = {temperature:.4g}, value {value:.6g}, best {best_value:.6g}")
    logger.info(
        f"annealing: {accepted} of {len(trace) - 1} moves accepted, best {best_value:.6g} "
        f"in {time.time() - start_time:.2f} sec"
    )
    return SelectionResult(best, best_value, trace, method="annealing")
