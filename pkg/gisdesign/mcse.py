"""
Spectral variance (SV) standard errors for the two-stage estimators.

Stage 1 gives the reverse logistic estimate d_hat with covariance V_hat; stage 2 gives u_hat and
eta_hat. Every asymptotic variance below combines a d_hat term, scaled by n / N, with a stage-2
term built from lag-window autocovariances of the importance weights.
"""
import logging
import math
from typing import NamedTuple, Optional, Sequence, List, Tuple

import numpy as np
import pandas as pd
from scipy.signal import fftconvolve

from .common.helpers import LogSpace, Matrix
from .common.validators import validate_choice, validate_integer
from .exceptions import InputError, NumericalError, DegenerateEstimatorError
from .family import SampleBank, UnnormalizedDensity
from .gis import Function, ISWeights, check_ratios, log_denominators, weights_from_denominators, pooled_mean
from .rlogistic import RLFit, information_matrix
from .settings import (
    default_window,
    _MIN_SV_ROWS,
    _RELIABLE_SV_ROWS,
    _SV_DIRECT_MAX_COLUMNS,
    _PINV_RCOND,
)

logger = logging.getLogger(__name__)

WINDOWS = ("tukey-hanning", "bartlett")


class LagWindow:
    """
    Lag window w(j) with truncation point b: w(0) = 1, w(j) = w(-j), w(j) = 0 for |j| >= b.

    Parameters
    ----------
    kind : {'tukey-hanning', 'bartlett'}, default 'tukey-hanning'
        Tukey-Hanning w(j) = (1 + cos(pi |j| / b)) / 2 or modified Bartlett w(j) = 1 - |j| / b.

    truncation : int, optional
        Fixed truncation point. By default b = floor(sqrt(n)) for a series of length n.

    Examples
    --------
    >>> LagWindow("bartlett").weights(4)
    array([1.  , 0.75, 0.5 , 0.25])
    """

    def __init__(self, kind: str = default_window, truncation: Optional[int] = None):
        self.kind = kind
        self.truncation = truncation

    def __repr__(self):
        dic = {"kind": self.kind, "truncation": self.truncation if self.truncation is not None else "floor(sqrt(n))"}
        return repr(pd.Series(dic))

    @property
    def kind(self) -> str:
        return self._kind

    @kind.setter
    def kind(self, value: str):
        validate_choice("kind", value, WINDOWS)
        self._kind = value

    @property
    def truncation(self) -> Optional[int]:
        return self._truncation

    @truncation.setter
    def truncation(self, value: Optional[int]):
        if value is not None:
            validate_integer("truncation", value, min_value=1)
            value = int(value)
        self._truncation = value

    def truncation_point(self, n: int) -> int:
        validate_integer("n", n, min_value=1)
        b = self.truncation if self.truncation is not None else math.isqrt(int(n))
        return max(1, min(b, int(n)))

    def weights(self, b: int) -> np.ndarray:
        """Window values w(0), ..., w(b - 1)."""
        validate_integer("b", b, min_value=1)
        j = np.arange(b)
        if self.kind == "tukey-hanning":
            return 0.5 * (1.0 + np.cos(np.pi * j / b))
        return 1.0 - j / b

    def __call__(self, j: int, b: int) -> float:
        j = abs(int(j))
        if j >= b:
            return 0.0
        return float(self.weights(b)[j])


def _window(window: Optional[LagWindow]) -> LagWindow:
    return LagWindow() if window is None else window


def sv_matrix(z, window: Optional[LagWindow] = None) -> np.ndarray:
    """
    Spectral variance estimate sum_{|j| < b} w(j) gamma(j) of a time-ordered series.

    gamma(j) is the mean-centred lag-j autocovariance with divisor n.
    Constant columns get exactly zero variance.

    Parameters
    ----------
    z : array_like
        (n, p) observations in time order, or a 1-D series.

    window : LagWindow, optional
        Default Tukey-Hanning with b = floor(sqrt(n)).

    Returns
    -------
    numpy.ndarray
        Symmetric (p, p) matrix.
    """
    z = Matrix.as_columns(z)
    if z.ndim != 2:
        raise InputError("observations must be a 1-D series or a 2-D matrix")
    n, p = z.shape
    if n < _MIN_SV_ROWS:
        raise InputError(f"spectral variance needs at least {_MIN_SV_ROWS} rows, got {n}")
    if not np.all(np.isfinite(z)):
        raise InputError("observations must be finite")
    window = _window(window)
    y = z - z.mean(axis=0)
    y[:, np.ptp(z, axis=0) == 0] = 0.0
    b = window.truncation_point(n)
    w = window.weights(b)
    if p <= _SV_DIRECT_MAX_COLUMNS or b == 1:
        sigma = y.T @ y / n
        for j in range(1, b):
            gamma = y[j:].T @ y[:-j] / n
            sigma += w[j] * (gamma + gamma.T)
    else:
        # (W y)_t = sum_s w(t - s) y_s; 'same' keeps the output aligned with y
        kernel = np.concatenate([w[:0:-1], w])
        smoothed = fftconvolve(y, kernel[:, np.newaxis], mode="same", axes=0)
        sigma = y.T @ smoothed / n
    return Matrix.symmetrize(sigma)


def warn_short_chains(stage: str, sizes) -> None:
    short = [int(s) for s in sizes if s < _RELIABLE_SV_ROWS]
    if short:
        logger.warning(f"{stage} chains with {short} rows are shorter than {_RELIABLE_SV_ROWS}; standard errors are unreliable")


def _check_psd(name: str, m: np.ndarray) -> None:
    if m.size == 0:
        return
    norm = np.linalg.norm(m, 2)
    if Matrix.min_eigenvalue(m) < -1e-8 * norm:
        logger.warning(f"{name} has a negative eigenvalue beyond tolerance")


class RLCovariance(NamedTuple):
    """
    SV estimate of the asymptotic covariance of zeta_hat (U) and of d_hat (V).

    B is the information matrix, Omega the combined membership-probability SV matrix and D the
    Jacobian of d in zeta. rank and condition describe the pseudo-inverse of B.
    """

    B: np.ndarray
    Omega: np.ndarray
    U: np.ndarray
    V: np.ndarray
    D: np.ndarray
    rank: int
    condition: float


def derivative_matrix(d) -> np.ndarray:
    """
    Jacobian of (d_2, ..., d_k) in zeta: k x (k - 1) with first row (d_2, ..., d_k)
    and -diag(d_2, ..., d_k) below.

    Examples
    --------
    >>> derivative_matrix([1.0, 2.0, 3.0])
    array([[ 2.,  3.],
           [-2., -0.],
           [-0., -3.]])
    """
    d = np.asarray(d, dtype=float)
    return np.vstack([d[1:], -np.diag(d[1:])])


def rl_covariance(bank: SampleBank, fit: RLFit, window: Optional[LagWindow] = None) -> RLCovariance:
    """
    Covariance estimates for the reverse logistic fit on the bank's stage-1 chains.

    Omega = sum_l (N / N_l) a_l^2 SV(membership probabilities along chain l),
    U = B^+ Omega B^+ with the Moore-Penrose inverse of B, V = D^T U D.

    Raises
    ------
    InputError
        If the fit did not converge or does not match the bank.

    NumericalError
        If the pseudo-inverse of B fails B B^+ B = B.
    """
    if not fit.converged:
        raise InputError("covariance estimates need a converged reverse logistic fit")
    k = bank.k
    zeta = np.asarray(fit.zeta_hat, dtype=float)
    if zeta.shape != (k,):
        raise InputError(f"fit has {zeta.shape[0]} parameters, bank has {k} proposals")
    window = _window(window)
    sizes = bank.N_l
    warn_short_chains("stage-1", sizes)
    N = bank.N
    a = bank.a

    B = information_matrix(bank, zeta)
    omega = np.zeros((k, k))
    for l, log_phi in enumerate(bank.stage1_log_phi):
        probs = LogSpace.softmax_rows(log_phi + zeta)
        omega += (N / sizes[l]) * a[l] ** 2 * sv_matrix(probs, window)
    omega = Matrix.symmetrize(omega)

    B_pinv, rank, condition = Matrix.pinv_sym(B, _PINV_RCOND)
    scale = max(1.0, float(np.max(np.abs(B))))
    if not np.all(np.isfinite(B_pinv)) or not np.allclose(B @ B_pinv @ B, B, rtol=0.0, atol=1e-8 * scale):
        raise NumericalError(f"pseudo-inverse of B failed: numerical rank {rank} of {k}, condition number {condition:.3g}")
    if rank < k - 1:
        logger.warning(f"B has rank {rank} < {k - 1}: some normalizer ratios are not identified")

    U = Matrix.symmetrize(B_pinv @ omega @ B_pinv)
    D = derivative_matrix(fit.d_hat)
    V = Matrix.symmetrize(D.T @ U @ D)
    _check_psd("V_hat", V)
    return RLCovariance(B=B, Omega=omega, U=U, V=V, D=D, rank=rank, condition=condition)


class Stage2Terms:
    """
    Stage-2 quantities that do not depend on the target: log mixture denominators and the
    responsibilities r_ij = a_j phi_j(X_i) / d_j / sum_s a_s phi_s(X_i) / d_s.

    Build once per (bank, d) and reuse across targets.
    """

    def __init__(self, bank: SampleBank, d):
        if bank.stage2 is None:
            raise InputError("standard errors need stage-2 chains")
        self.bank = bank
        self.d = check_ratios(d, bank.k)
        self.a = bank.a
        self.n_l = bank.n_l
        self.n = bank.n
        self.log_dens = log_denominators(bank, self.d)
        log_ad = np.log(self.a) - np.log(self.d)
        self.resp = [
            LogSpace.exp_ratio(log_phi + log_ad, log_den[:, np.newaxis])
            for log_phi, log_den in zip(bank.stage2_log_phi, self.log_dens)
        ]

    def weights(self, target: UnnormalizedDensity, f: Optional[Function] = None) -> ISWeights:
        return weights_from_denominators(target, self.bank, self.log_dens, f)

    def mean(self, values: List[np.ndarray]) -> float:
        return pooled_mean(self.bank, values)

    def c_vector(self, values: List[np.ndarray]) -> np.ndarray:
        """
        sum_l a_l / n_l sum_i values_i r_ij / d_j for j = 2..k.

        With values = u this is c_hat; with values = v it is the f-weighted analogue.
        """
        total = np.zeros(self.bank.k)
        for a_l, n_l, x, r in zip(self.a, self.n_l, values, self.resp):
            total += a_l / n_l * (x @ r)
        return total[1:] / self.d[1:]

    def combined_sv(self, columns: List[np.ndarray], window: Optional[LagWindow]) -> np.ndarray:
        """sum_l (a_l^2 n / n_l) SV(columns_l)."""
        window = _window(window)
        scales = self.a ** 2 * self.n / self.n_l
        return Matrix.symmetrize(sum(s * sv_matrix(col, window) for s, col in zip(scales, columns)))

    def ratio_summary(self, target: UnnormalizedDensity, f: Function) -> Tuple[ISWeights, float, float]:
        """Weights, u_hat and v_hat for a target; u_hat must be nonzero."""
        weights = self.weights(target, f)
        u = self.mean(weights.u)
        if u == 0.0:
            raise DegenerateEstimatorError(f"u_hat is zero for target {target.label}")
        return weights, u, self.mean(weights.v)

    def e_vector(self, weights: ISWeights, u: float, v: float) -> np.ndarray:
        return (self.c_vector(weights.v) - self.c_vector(weights.u) * (v / u)) / u


def _rl_terms(bank: SampleBank, fit: Optional[RLFit], rlcov: Optional[RLCovariance], window, d):
    """
    d, V_hat and n / N for the variance formulas.

    Without a fit the ratios d are taken as known and V_hat is None.
    """
    if fit is None:
        if d is None:
            if bank.k != 1:
                raise InputError("give a reverse logistic fit or the known normalizer ratios d")
            d = [1.0]
        return check_ratios(d, bank.k), None, 0.0
    if d is not None:
        raise InputError("d comes from the fit; pass either a fit or known ratios")
    if rlcov is None:
        rlcov = rl_covariance(bank, fit, window)
    if rlcov.V.shape != (bank.k - 1, bank.k - 1):
        raise InputError("covariance estimate does not match the bank")
    return np.asarray(fit.d_hat), rlcov.V, bank.n / bank.N


def c_hat(target: UnnormalizedDensity, bank: SampleBank, d) -> np.ndarray:
    """
    Sensitivity vector of u_hat to d, length k - 1.

    [c_hat]_{j-1} = sum_l 1/n_l sum_i a_j a_l nu(X_i) phi_j(X_i) / (den(X_i)^2 d_j^2).
    """
    terms = Stage2Terms(bank, d)
    return terms.c_vector(terms.weights(target).u)


def e_hat(f: Function, target: UnnormalizedDensity, bank: SampleBank, d) -> np.ndarray:
    """
    Sensitivity vector of eta_hat to d, length k - 1. Zero when f is constant.

    Raises
    ------
    DegenerateEstimatorError
        If u_hat is zero.
    """
    terms = Stage2Terms(bank, d)
    weights, u, v = terms.ratio_summary(target, f)
    return terms.e_vector(weights, u, v)


def tau2_hat(target: UnnormalizedDensity, bank: SampleBank, d, window: Optional[LagWindow] = None) -> float:
    """
    Stage-2 part of the variance of u_hat: sum_l (a_l^2 n / n_l) SV(u along chain l).
    """
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    return float(terms.combined_sv(terms.weights(target).u, window)[0, 0])


def gamma_hat(f: Function, target: UnnormalizedDensity, bank: SampleBank, d, window: Optional[LagWindow] = None) -> np.ndarray:
    """
    2 x 2 SV matrix of the pairs (v_i, u_i), combined over chains like tau2_hat.
    """
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    weights = terms.weights(target, f)
    return terms.combined_sv([np.column_stack([v, u]) for v, u in zip(weights.v, weights.u)], window)


def _ratio_gradient(u: float, v: float) -> np.ndarray:
    return np.array([1.0 / u, -v / u ** 2])


def sigma2_u_hat(
    target: UnnormalizedDensity,
    bank: SampleBank,
    fit: Optional[RLFit] = None,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
    *,
    d=None,
) -> float:
    """
    Asymptotic variance of sqrt(n) (u_hat - u): (n / N) c_hat^T V_hat c_hat + tau2_hat.

    Parameters
    ----------
    target : UnnormalizedDensity
        Target nu.

    bank : SampleBank
        Stage-1 chains behind `fit` and stage-2 chains.

    fit : RLFit, optional
        Reverse logistic fit. Omit it and pass `d` when the ratios are known; the variance is
        then tau2_hat alone.

    rlcov : RLCovariance, optional
        Computed from `fit` when omitted.

    window : LagWindow, optional
        Default Tukey-Hanning.

    d : array_like, optional
        Known normalizer ratios.
    """
    d, V, ratio = _rl_terms(bank, fit, rlcov, window, d)
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    u = terms.weights(target).u
    tau2 = float(terms.combined_sv(u, window)[0, 0])
    if V is None or V.size == 0:
        return tau2
    c = terms.c_vector(u)
    return float(ratio * c @ V @ c + tau2)


def sigma2_eta_hat(
    f: Function,
    target: UnnormalizedDensity,
    bank: SampleBank,
    fit: Optional[RLFit] = None,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
    *,
    d=None,
) -> float:
    """
    Asymptotic variance of sqrt(n) (eta_hat - E f): (n / N) e_hat^T V_hat e_hat + rho_hat,
    rho_hat = grad h^T Gamma_hat grad h with grad h = (1 / u_hat, -v_hat / u_hat^2).
    """
    d, V, ratio = _rl_terms(bank, fit, rlcov, window, d)
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    weights, u, v = terms.ratio_summary(target, f)
    gamma = terms.combined_sv([np.column_stack([vc, uc]) for vc, uc in zip(weights.v, weights.u)], window)
    grad = _ratio_gradient(u, v)
    rho = float(grad @ gamma @ grad)
    if V is None or V.size == 0:
        return rho
    e = terms.e_vector(weights, u, v)
    return float(ratio * e @ V @ e + rho)


def _weight_columns(terms: Stage2Terms, targets: Sequence[UnnormalizedDensity], f: Optional[Function] = None):
    if len(targets) == 0:
        raise InputError("targets must not be empty")
    return [terms.weights(t, f) for t in targets]


def t_hat(
    targets: Sequence[UnnormalizedDensity],
    bank: SampleBank,
    d,
    window: Optional[LagWindow] = None,
    *,
    per_chain: bool = False,
):
    """
    SV matrix of the vector of weights (u^pi, pi in targets), |targets| x |targets|.

    Returns sum_l (a_l^2 n / n_l) T_l, or the list of T_l when `per_chain` is set.
    """
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    weights = _weight_columns(terms, targets)
    columns = [np.column_stack([w.u[l] for w in weights]) for l in range(bank.k)]
    if per_chain:
        window = _window(window)
        return [sv_matrix(col, window) for col in columns]
    return terms.combined_sv(columns, window)


def _c_matrix(terms: Stage2Terms, weights: List[ISWeights]) -> np.ndarray:
    return np.vstack([terms.c_vector(w.u) for w in weights]) if weights else np.zeros((0, terms.bank.k - 1))


def joint_sigma22(
    targets: Sequence[UnnormalizedDensity],
    bank: SampleBank,
    fit: Optional[RLFit] = None,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
    *,
    d=None,
) -> np.ndarray:
    """
    Joint asymptotic covariance of u_hat over the targets: (n / N) C V C^T + T_hat.

    Row i of C is c_hat for target i. The diagonal reproduces sigma2_u_hat.
    """
    d, V, ratio = _rl_terms(bank, fit, rlcov, window, d)
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    weights = _weight_columns(terms, targets)
    columns = [np.column_stack([w.u[l] for w in weights]) for l in range(bank.k)]
    sigma = terms.combined_sv(columns, window)
    if V is not None and V.size:
        C = _c_matrix(terms, weights)
        sigma = sigma + ratio * C @ V @ C.T
    sigma = Matrix.symmetrize(sigma)
    _check_psd("Sigma22_hat", sigma)
    return sigma


def joint_sigma21(
    targets: Sequence[UnnormalizedDensity],
    bank: SampleBank,
    fit: RLFit,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
) -> np.ndarray:
    """
    Cross covariance of (u_hat over the targets) with d_hat: (n / N) C V, |targets| x (k - 1).
    """
    if fit is None:
        raise InputError("the cross covariance with d_hat needs a reverse logistic fit")
    d, V, ratio = _rl_terms(bank, fit, rlcov, window, None)
    terms = Stage2Terms(bank, d)
    return ratio * _c_matrix(terms, _weight_columns(terms, targets)) @ V


def _stacked_columns(weights: List[ISWeights], k: int) -> List[np.ndarray]:
    return [np.column_stack([w.v[l] for w in weights] + [w.u[l] for w in weights]) for l in range(k)]


def _ratio_jacobian(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.hstack([np.diag(1.0 / u), np.diag(-v / u ** 2)])


def _summaries(terms: Stage2Terms, targets, f):
    if len(targets) == 0:
        raise InputError("targets must not be empty")
    weights, us, vs = [], [], []
    for target in targets:
        w, u, v = terms.ratio_summary(target, f)
        weights.append(w)
        us.append(u)
        vs.append(v)
    return weights, np.array(us), np.array(vs)


def lambda_hat(
    f: Function,
    targets: Sequence[UnnormalizedDensity],
    bank: SampleBank,
    d,
    window: Optional[LagWindow] = None,
) -> np.ndarray:
    """
    SV matrix of the stacked vector (v^pi over targets, u^pi over targets), 2|targets| square,
    combined over chains with weights a_l^2 n / n_l.
    """
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    weights = _weight_columns(terms, targets, f)
    return terms.combined_sv(_stacked_columns(weights, bank.k), window)


def rho_vec_hat(
    f: Function,
    targets: Sequence[UnnormalizedDensity],
    bank: SampleBank,
    d,
    window: Optional[LagWindow] = None,
) -> np.ndarray:
    """
    grad h Lambda_hat grad h^T with grad h = [diag(1 / u_hat), diag(-v_hat / u_hat^2)].
    """
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    weights, u, v = _summaries(terms, targets, f)
    lam = terms.combined_sv(_stacked_columns(weights, bank.k), window)
    jac = _ratio_jacobian(u, v)
    return Matrix.symmetrize(jac @ lam @ jac.T)


def delta22_hat(
    f: Function,
    targets: Sequence[UnnormalizedDensity],
    bank: SampleBank,
    fit: Optional[RLFit] = None,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
    *,
    d=None,
) -> np.ndarray:
    """
    Joint asymptotic covariance of eta_hat over the targets: (n / N) E V E^T + rho_vec_hat.

    The diagonal reproduces sigma2_eta_hat.
    """
    d, V, ratio = _rl_terms(bank, fit, rlcov, window, d)
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    weights, u, v = _summaries(terms, targets, f)
    lam = terms.combined_sv(_stacked_columns(weights, bank.k), window)
    jac = _ratio_jacobian(u, v)
    delta = jac @ lam @ jac.T
    if V is not None and V.size:
        E = np.vstack([terms.e_vector(w, u_i, v_i) for w, u_i, v_i in zip(weights, u, v)])
        delta = delta + ratio * E @ V @ E.T
    delta = Matrix.symmetrize(delta)
    _check_psd("Delta22_hat", delta)
    return delta


def delta21_hat(
    f: Function,
    targets: Sequence[UnnormalizedDensity],
    bank: SampleBank,
    fit: RLFit,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
) -> np.ndarray:
    """Cross covariance of (eta_hat over the targets) with d_hat: (n / N) E V."""
    if fit is None:
        raise InputError("the cross covariance with d_hat needs a reverse logistic fit")
    d, V, ratio = _rl_terms(bank, fit, rlcov, window, None)
    terms = Stage2Terms(bank, d)
    weights, u, v = _summaries(terms, targets, f)
    E = np.vstack([terms.e_vector(w, u_i, v_i) for w, u_i, v_i in zip(weights, u, v)])
    return ratio * E @ V


class Upsilon(NamedTuple):
    """Square roots of c^T V c (stage 1) and tau2 (stage 2), with u_hat."""

    stage1: float
    stage2: float
    u: float


def upsilon(
    target: UnnormalizedDensity,
    bank: SampleBank,
    fit: Optional[RLFit] = None,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
    *,
    d=None,
) -> Upsilon:
    d, V, _ = _rl_terms(bank, fit, rlcov, window, d)
    terms = Stage2Terms(bank, d)
    warn_short_chains("stage-2", terms.n_l)
    u = terms.weights(target).u
    tau2 = float(terms.combined_sv(u, window)[0, 0])
    stage1 = 0.0
    if V is not None and V.size:
        c = terms.c_vector(u)
        stage1 = math.sqrt(max(float(c @ V @ c), 0.0))
    return Upsilon(stage1=stage1, stage2=math.sqrt(max(tau2, 0.0)), u=terms.mean(u))


def relative_se(ups: Upsilon, N: int, n: int) -> float:
    """
    (upsilon_1 / sqrt(N) + upsilon_2 / sqrt(n)) / u_hat.

    Raises
    ------
    DegenerateEstimatorError
        If u_hat is zero.
    """
    if ups.u == 0.0:
        raise DegenerateEstimatorError("relative standard error is undefined for u_hat = 0")
    if N <= 0 and ups.stage1 > 0.0:
        raise InputError("a stage-1 term needs N > 0")
    stage1 = ups.stage1 / math.sqrt(N) if N > 0 else 0.0
    return float((stage1 + ups.stage2 / math.sqrt(n)) / ups.u)


def rel_se(
    target: UnnormalizedDensity,
    bank: SampleBank,
    fit: Optional[RLFit] = None,
    rlcov: Optional[RLCovariance] = None,
    window: Optional[LagWindow] = None,
    N: Optional[int] = None,
    n: Optional[int] = None,
    *,
    d=None,
) -> float:
    """
    Relative standard error of u_hat for stage sizes N and n (default: the bank's own).

    Doubling N and n divides the value by sqrt(2).
    """
    ups = upsilon(target, bank, fit, rlcov, window, d=d)
    N = (bank.N if fit is not None else 0) if N is None else N
    n = bank.n if n is None else n
    validate_integer("N", N, min_value=0)
    validate_integer("n", n, min_value=1)
    return relative_se(ups, N, n)
