"""
Skeleton-set design criteria. Every criterion maps a SkeletonSet to a real value; lower is better.
"""
import logging
import math
import threading
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from ..common.helpers import Matrix
from ..common.validators import validate_real, validate_integer, validate_choice
from ..exceptions import InputError, GisDesignError, EvaluationError, NumericalError
from ..estimator import TwoStageEstimator
from ..family import SkeletonSet
from ..gis import Function
from ..mcse import LagWindow, Upsilon, relative_se, rl_covariance
from ..rlogistic import fit_reverse_logistic
from ..sampling import SampleCache
from ..settings import default_p, default_p_tilde

logger = logging.getLogger(__name__)

OBJECTIVES = ("u", "eta")


def _as_distance_matrix(dist) -> np.ndarray:
    matrix = np.asarray(dist.values if isinstance(dist, pd.DataFrame) else dist, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError("distances must be a square matrix")
    if np.isnan(matrix).any():
        raise InputError("distances must not be NaN")
    if (matrix < 0).any():
        raise InputError("distances must be nonnegative")
    return matrix


def coverage_criterion(dist, skeleton: Sequence[int], p: float = default_p, p_tilde: float = default_p_tilde) -> float:
    """
    Coverage of the grid by a skeleton set, Psi = (sum_pi psi(pi)^p_tilde)^(1 / p_tilde) with
    psi(pi) = (sum_{q in skeleton} dist(pi, q)^p)^(1 / p).

    psi(pi) is 0 when pi is at distance 0 from the skeleton. Computed in log space.

    Parameters
    ----------
    dist : array_like
        |Xi| x |Xi| nonnegative distances.

    skeleton : sequence of int
        Grid indices of the skeleton.

    p : float, default -30
        Negative exponent; psi tends to the minimum distance as p -> -inf.

    p_tilde : float, default 30
        Positive exponent; Psi tends to the maximum of psi as p_tilde -> inf.

    Examples
    --------
    >>> dist = np.abs(np.subtract.outer([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))
    >>> round(coverage_criterion(dist, [0, 2]), 4)
    0.9772
    """
    validate_real("p", p, max_value=0.0, inclusive=False)
    validate_real("p_tilde", p_tilde, min_value=0.0, inclusive=False)
    matrix = _as_distance_matrix(dist)
    indices = np.asarray(list(skeleton), dtype=int)
    if indices.size == 0:
        raise InputError("the skeleton must not be empty")
    if indices.min() < 0 or indices.max() >= matrix.shape[0]:
        raise InputError("skeleton index outside the distance matrix")
    to_skeleton = matrix[:, indices]
    covered = (to_skeleton == 0).any(axis=1)
    if covered.all():
        return 0.0
    with np.errstate(divide="ignore"):
        log_d = np.log(to_skeleton[~covered])
    log_psi = logsumexp(p * log_d, axis=1) / p
    return float(np.exp(logsumexp(p_tilde * log_psi) / p_tilde))


class DesignCriterion:
    """
    Base class of the design criteria. Values are memoized per skeleton set, so revisiting a
    set in a search returns the identical value.
    """

    kind = None

    def __init__(self):
        self._values = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return repr(pd.Series({"kind": self.kind, "evaluated sets": len(self._values)}))

    def _evaluate(self, skeleton: SkeletonSet) -> float:
        raise NotImplementedError

    def evaluate(self, skeleton: SkeletonSet) -> float:
        value = self._values.get(skeleton)
        if value is None:
            try:
                value = float(self._evaluate(skeleton))
            except GisDesignError as error:
                raise type(error)(f"{error} (skeleton {skeleton.sorted_indices()})") from error
            with self._lock:
                self._values.setdefault(skeleton, value)
        return value

    __call__ = evaluate


class CoverageCriterion(DesignCriterion):
    """Space-filling coverage criterion over a fixed distance matrix."""

    kind = "space-filling"

    def __init__(self, dist, p: float = default_p, p_tilde: float = default_p_tilde):
        super().__init__()
        self.dist = _as_distance_matrix(dist)
        validate_real("p", p, max_value=0.0, inclusive=False)
        validate_real("p_tilde", p_tilde, min_value=0.0, inclusive=False)
        self.p = p
        self.p_tilde = p_tilde

    def _evaluate(self, skeleton: SkeletonSet) -> float:
        return coverage_criterion(self.dist, skeleton.indices, self.p, self.p_tilde)


def split_grid(budget: int, k: int, min_stage1: Optional[int] = None, max_stage1: Optional[int] = None, step: Optional[int] = None) -> np.ndarray:
    """Candidate stage-1 totals N in {k, 2k, ..., M - k}, optionally restricted."""
    validate_integer("k", k, min_value=1)
    validate_integer("budget", budget)
    if budget < 2 * k:
        raise InputError(f"a total budget of at least 2k = {2 * k} is needed, got {budget}")
    step = k if step is None else step
    validate_integer("step", step, min_value=1)
    lo = k if min_stage1 is None else max(k, int(min_stage1))
    hi = budget - k if max_stage1 is None else min(budget - k, int(max_stage1))
    candidates = np.arange(lo, hi + 1, step)
    if candidates.size == 0:
        raise InputError(f"no stage-1 size between {lo} and {hi}")
    return candidates


def split_objective(stage1_sizes, budget: int, v1, v2, u) -> np.ndarray:
    """max over grid points of RelSE(xi, N, M - N) for every N in `stage1_sizes`."""
    v1, v2, u = (np.asarray(x, dtype=float).reshape(-1) for x in (v1, v2, u))
    if not (v1.shape == v2.shape == u.shape) or u.size == 0:
        raise InputError("upsilon and u_hat vectors must have one common nonzero length")
    if np.any(u <= 0) or np.any(v1 < 0) or np.any(v2 < 0):
        raise InputError("u_hat must be positive and upsilon nonnegative")
    N = np.asarray(stage1_sizes, dtype=float)[:, np.newaxis]
    rel = (v1 / np.sqrt(N) + v2 / np.sqrt(budget - N)) / u
    return rel.max(axis=1)


class MinimaxCriterion(DesignCriterion):
    """
    max over the grid of the relative SE of u_hat, minimized over the stage-1/stage-2 split of a
    total budget M (objective 'u'), or max over the grid of se(eta_hat) / |eta_hat| at the bank's own
    sizes (objective 'eta').

    Chains come from `cache`, so candidate sets that share grid points share samples.
    """

    kind = "minimax-relse"

    def __init__(
        self,
        cache: SampleCache,
        budget: Optional[int] = None,
        window: Optional[LagWindow] = None,
        objective: str = "u",
        f: Optional[Function] = None,
    ):
        super().__init__()
        validate_choice("objective", objective, OBJECTIVES)
        if objective == "eta" and f is None:
            raise InputError("objective 'eta' needs a function f")
        self.cache = cache
        self.budget = budget
        self.window = window
        self.objective = objective
        self.f = f
        self.splits = {}

    def total_budget(self, k: int) -> int:
        if self.budget is not None:
            return int(self.budget)
        config = self.cache.config
        return k * (config.stage1_size + config.stage2_size)

    def estimator(self, skeleton: SkeletonSet) -> TwoStageEstimator:
        stage1 = None if skeleton.k > 1 else 0
        bank = self.cache.bank(skeleton, stage1_size=stage1)
        return TwoStageEstimator(self.cache.grid, bank, self.window)

    def _evaluate(self, skeleton: SkeletonSet) -> float:
        est = self.estimator(skeleton)
        if self.objective == "eta":
            table = est.profile(self.f)
            return float((table["se_eta"] / table["eta_hat"].abs()).max())
        ups = est.upsilon()
        if (ups["u"] <= 0).any():
            return math.inf
        k = skeleton.k
        budget = self.total_budget(k)
        if k == 1:
            values = [relative_se(Upsilon(*row), 0, budget) for row in ups.itertuples(index=False)]
            self.splits[skeleton] = (0, budget)
            return float(max(values))
        candidates = split_grid(budget, k)
        objective = split_objective(candidates, budget, ups["stage1"], ups["stage2"], ups["u"])
        best = int(np.argmin(objective))
        self.splits[skeleton] = (int(candidates[best]), budget - int(candidates[best]))
        return float(objective[best])


class EntropyCriterion(DesignCriterion):
    """
    -log det of the covariance of the reverse logistic estimate, from stage-1 chains only.

    With ``scaled=True`` the matrix is U_ij = V_ij / (d_i d_j) over j = 2..k, otherwise V itself.
    Singular matrices and failed fits score +inf.
    """

    kind = "neg-log-det-entropy"

    def __init__(self, cache: SampleCache, window: Optional[LagWindow] = None, scaled: bool = True):
        super().__init__()
        self.cache = cache
        self.window = window
        self.scaled = scaled

    def _evaluate(self, skeleton: SkeletonSet) -> float:
        if skeleton.k == 1:
            return 0.0
        bank = self.cache.bank(skeleton, stage2_size=0)
        try:
            fit = fit_reverse_logistic(bank)
            if not fit.converged:
                logger.debug(f"reverse logistic fit did not converge for {skeleton.sorted_indices()}")
                return math.inf
            V = rl_covariance(bank, fit, self.window).V
        except (EvaluationError, NumericalError) as error:
            logger.debug(f"entropy of {skeleton.sorted_indices()} rejected: {error}")
            return math.inf
        if self.scaled:
            d = fit.d_hat[1:]
            V = V / np.outer(d, d)
        return Matrix.neg_log_det(V)
