"""
Reverse logistic regression estimates of the proposal normalizer ratios d from stage-1 chains.
"""
import logging
from typing import NamedTuple, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .common.validators import validate_integer, validate_real
from .exceptions import InputError, EvaluationError
from .family import SampleBank, UnnormalizedDensity
from .settings import default_tol, default_max_iter, _MAX_STEP_HALVINGS

logger = logging.getLogger(__name__)


class RLFit(NamedTuple):
    """
    Result of a reverse logistic regression fit.

    zeta_hat sums to zero; d_hat[0] is exactly 1.
    """

    zeta_hat: np.ndarray
    d_hat: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    loglik: float


def membership_probs(x, densities: Sequence[UnnormalizedDensity], zeta) -> np.ndarray:
    """
    Probability that point `x` was drawn from each of the k densities.

    p_l = exp(log phi_l(x) + zeta_l) / sum_s exp(log phi_s(x) + zeta_s), through log-sum-exp.

    Raises
    ------
    EvaluationError
        If every phi_l(x) is zero.

    Examples
    --------
    >>> flat = UnnormalizedDensity(lambda x: np.zeros(x.shape[0]), dim=1)
    >>> membership_probs([0.0], [flat, flat], [np.log(3), -np.log(3)])
    array([0.9, 0.1])
    """
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (len(densities),) or not np.all(np.isfinite(zeta)):
        raise InputError(f"zeta must be a finite vector of length {len(densities)}")
    point = np.asarray(x, dtype=float).reshape(1, -1)
    log_phi = np.array([dens.log_weights(point)[0] for dens in densities])
    logits = log_phi + zeta
    if np.all(np.isneginf(logits)):
        raise EvaluationError("every density is zero at the point")
    return np.exp(logits - logsumexp(logits))


def zeta_to_d(zeta, a) -> np.ndarray:
    """
    Map zeta to the normalizer ratios: d_j = exp(zeta_1 - zeta_j) a_j / a_1, d_1 = 1.

    Examples
    --------
    >>> zeta_to_d([0.5, -0.5], [0.5, 0.5])
    array([1.        , 2.71828183])
    """
    zeta = np.asarray(zeta, dtype=float)
    a = np.asarray(a, dtype=float)
    if zeta.shape != a.shape:
        raise InputError("zeta and a must have the same length")
    if np.any(a <= 0):
        raise InputError("a must be positive")
    if not np.all(np.isfinite(zeta)):
        raise InputError("zeta must be finite")
    d = np.exp(zeta[0] - zeta) * a / a[0]
    d[0] = 1.0
    return d


def _scaled_objective(zeta: np.ndarray, bank: SampleBank) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Quasi log-likelihood divided by N, with its gradient and Hessian in zeta.
    """
    a = bank.a
    sizes = bank.N_l
    k = bank.k
    value = 0.0
    grad = np.array(a, dtype=float)
    hess = np.zeros((k, k))
    for l, log_phi in enumerate(bank.stage1_log_phi):
        logits = log_phi + zeta
        with np.errstate(divide="ignore", invalid="ignore"):
            lse = logsumexp(logits, axis=1)
        if not np.all(np.isfinite(lse)):
            raise EvaluationError(f"a stage-1 draw of proposal {l} has zero total mixture weight")
        probs = np.exp(logits - lse[:, np.newaxis])
        weight = a[l] / sizes[l]
        value += weight * np.sum(logits[:, l] - lse)
        column_sums = probs.sum(axis=0)
        grad -= weight * column_sums
        hess -= weight * (np.diag(column_sums) - probs.T @ probs)
    return value, grad, hess


def quasi_loglik(zeta, bank: SampleBank) -> float:
    """
    Log quasi-likelihood sum_l a_l (N / N_l) sum_i log p_l(X_i^(l), zeta).

    Adding a constant to every zeta_l leaves the value unchanged.
    """
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (bank.k,):
        raise InputError(f"zeta must have length {bank.k}")
    value, _, _ = _scaled_objective(zeta, bank)
    return float(value * bank.N)


def information_matrix(bank: SampleBank, zeta) -> np.ndarray:
    """
    B_hat: the matrix of second derivatives of -quasi_loglik / N at `zeta`.

    B_rr = sum_l a_l mean_i p_r (1 - p_r), B_rs = -sum_l a_l mean_i p_r p_s.
    """
    _, _, hess = _scaled_objective(np.asarray(zeta, dtype=float), bank)
    return -(hess + hess.T) / 2.0


def fit_reverse_logistic(bank: SampleBank, tol: float = default_tol, max_iter: int = default_max_iter) -> RLFit:
    """
    Maximize the quasi log-likelihood on the sum-zero hyperplane.

    Newton-Raphson on the reduced parameters (zeta_1..zeta_{k-1}), zeta_k = -sum of the others,
    with step halving so that iterates never decrease the objective. Starts at zeta = 0.

    Parameters
    ----------
    bank : SampleBank
        Bank with stage-1 chains for k >= 2 proposals.

    tol : float, default 1e-10
        Bound on the infinity norm of the projected gradient of quasi_loglik / N.

    max_iter : int, default 200
        Newton iterations before giving up. Reaching the limit is reported through
        ``converged=False``, not raised.

    Returns
    -------
    RLFit

    Examples
    --------
    Proposals N(0, 1) and N(0, 2) have normalizer ratio 2:

    >>> grid = GaussianFamily([[0.0, 1.0], [0.0, 2.0]])
    >>> bank = SampleCache(grid, SamplerConfig(stage2_size=0, seed=1)).bank(SkeletonSet([0, 1]))
    >>> np.round(fit_reverse_logistic(bank).d_hat, 1)
    array([1., 2.])
    """
    validate_real("tol", tol, min_value=0.0)
    validate_integer("max_iter", max_iter, min_value=1)
    if bank.stage1 is None:
        raise InputError("reverse logistic regression needs stage-1 chains")
    k = bank.k
    if k < 2:
        raise InputError("reverse logistic regression needs at least 2 proposals")

    zeta = np.zeros(k)
    value, grad, hess = _scaled_objective(zeta, bank)
    if not np.isfinite(value):
        raise InputError("quasi log-likelihood is not finite at zeta = 0")
    reduce = np.vstack([np.eye(k - 1), -np.ones((1, k - 1))])

    converged = False
    grad_norm = np.inf
    iteration = 0
    for iteration in range(max_iter + 1):
        grad_norm = float(np.max(np.abs(grad - grad.mean())))
        if grad_norm <= tol:
            converged = True
            break
        if iteration == max_iter:
            break
        reduced_grad = reduce.T @ grad
        reduced_hess = reduce.T @ hess @ reduce
        try:
            step = np.linalg.solve(-reduced_hess, reduced_grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-reduced_hess, reduced_grad, rcond=None)[0]
        direction = reduce @ step
        scale = 1.0
        for halving in range(_MAX_STEP_HALVINGS):
            candidate = zeta + scale * direction
            cand_value, cand_grad, cand_hess = _scaled_objective(candidate, bank)
            if np.isfinite(cand_value) and cand_value >= value:
                break
            scale /= 2.0
        else:
            logger.debug(f"step halving exhausted at iteration {iteration}")
            break
        logger.debug(f"iteration {iteration}: {halving} halvings, objective {cand_value:.17g}")
        zeta, value, grad, hess = candidate, cand_value, cand_grad, cand_hess

    if not converged:
        logger.warning(f"reverse logistic regression stopped after {iteration} iterations, gradient norm {grad_norm:.3g}")
    else:
        logger.info(f"reverse logistic regression converged in {iteration} iterations")
    return RLFit(
        zeta_hat=zeta,
        d_hat=zeta_to_d(zeta, bank.a),
        converged=converged,
        iterations=iteration,
        grad_norm=grad_norm,
        loglik=float(value * bank.N),
    )
