"""
Generalized importance sampling point estimates from the stage-2 chains of a sample bank.

For a target nu and proposals phi_1..phi_k with weights a and normalizer ratios d,

    u(x) = nu(x) / sum_s a_s phi_s(x) / d_s,    v(x) = f(x) u(x),
    u_hat = sum_l a_l / n_l sum_i u(X_i^(l)),     eta_hat = v_hat / u_hat.

u_hat estimates the ratio of the target's normalizing constant to that of the reference proposal.
"""
from typing import NamedTuple, List, Optional, Callable

import numpy as np

from .common.helpers import LogSpace
from .exceptions import InputError, SupportError, DegenerateEstimatorError, EvaluationError
from .family import SampleBank, UnnormalizedDensity

Function = Callable[[np.ndarray], np.ndarray]


class ISWeights(NamedTuple):
    """
    Per stage-2 chain importance weights in temporal order.

    v is None unless a function f was supplied.
    """

    u: List[np.ndarray]
    v: Optional[List[np.ndarray]]


def check_ratios(d, k: int) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape != (k,):
        raise InputError(f"d must have length {k}, got {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise InputError("d must be positive and finite")
    if abs(d[0] - 1.0) > 1e-12:
        raise InputError(f"d_1 must be 1, got {d[0]:.17g}")
    return d


def evaluate_function(f: Function, draws: np.ndarray) -> np.ndarray:
    """
    Apply a vectorised f to the rows of `draws`; every value must be finite.
    """
    values = np.asarray(f(draws), dtype=float).reshape(-1)
    if values.shape[0] != draws.shape[0]:
        raise EvaluationError(f"f returned {values.shape[0]} values for {draws.shape[0]} points")
    if not np.all(np.isfinite(values)):
        raise EvaluationError("f is not finite on the samples")
    return values


def log_denominators(bank: SampleBank, d) -> List[np.ndarray]:
    """
    Per stage-2 chain, log sum_j a_j phi_j(X_i) / d_j.
    """
    d = check_ratios(d, bank.k)
    a = bank.a
    return [LogSpace.log_mixture(log_phi, a, d) for log_phi in bank.stage2_log_phi]


def is_weights(target: UnnormalizedDensity, bank: SampleBank, d, f: Optional[Function] = None) -> ISWeights:
    """
    Importance weights u_i (and v_i = f u_i when `f` is given) for every stage-2 draw.

    Parameters
    ----------
    target : UnnormalizedDensity
        Target nu.

    bank : SampleBank
        Bank with stage-2 chains.

    d : array_like
        Positive normalizer ratios with d_1 = 1.

    f : callable, optional
        Vectorised function of the draws, (n, dim) -> n values.

    Raises
    ------
    SupportError
        If nu(X_i) > 0 where the proposal mixture is zero.

    Examples
    --------
    >>> weights = is_weights(bank.densities[0], bank, d=[1.0])
    >>> weights.u[0][:3]
    array([1., 1., 1.])
    """
    if bank.stage2 is None:
        raise InputError("importance sampling needs stage-2 chains")
    return weights_from_denominators(target, bank, log_denominators(bank, d), f)


def weights_from_denominators(
    target: UnnormalizedDensity, bank: SampleBank, log_dens: List[np.ndarray], f: Optional[Function] = None
) -> ISWeights:
    """
    Importance weights given the per-chain log mixture denominators from `log_denominators`.
    """
    if target.dim != bank.dim:
        raise InputError(f"target has dimension {target.dim}, proposals have {bank.dim}")
    u, v = [], [] if f is not None else None
    for chain, log_den in zip(bank.stage2, log_dens):
        log_nu = target.log_weights(chain.draws)
        if np.any(np.isfinite(log_nu) & np.isneginf(log_den)):
            raise SupportError(f"target {target.label} is positive where the proposal mixture is zero")
        weights = LogSpace.exp_ratio(log_nu, log_den)
        u.append(weights)
        if f is not None:
            v.append(evaluate_function(f, chain.draws) * weights)
    return ISWeights(u=u, v=v)


def pooled_mean(bank: SampleBank, values: List[np.ndarray]) -> float:
    a = bank.a
    return float(sum(a_l * np.mean(x) for a_l, x in zip(a, values)))


def u_hat(target: UnnormalizedDensity, bank: SampleBank, d) -> float:
    """
    Estimate of the ratio of the target's normalizing constant to the reference proposal's.

    For k = 1 this is the naive importance sampling estimator.
    """
    return pooled_mean(bank, is_weights(target, bank, d).u)


def v_hat(f: Function, target: UnnormalizedDensity, bank: SampleBank, d) -> float:
    return pooled_mean(bank, is_weights(target, bank, d, f).v)


def eta_hat(f: Function, target: UnnormalizedDensity, bank: SampleBank, d) -> float:
    """
    Estimate of E_pi f as v_hat / u_hat.

    Raises
    ------
    DegenerateEstimatorError
        If u_hat is zero.
    """
    weights = is_weights(target, bank, d, f)
    u = pooled_mean(bank, weights.u)
    if u == 0.0:
        raise DegenerateEstimatorError(f"u_hat is zero for target {target.label}")
    return pooled_mean(bank, weights.v) / u
