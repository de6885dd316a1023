"""
Symmetric Kullback-Leibler divergence (SKLD) between members of a family.

SKLD(pi_1, pi_2) = E_1 log(pi_1 / pi_2) + E_2 log(pi_2 / pi_1). Normalizing constants cancel,
so both estimators work with the unnormalized log densities only.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple, Callable

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .common.helpers import Streams
from .common.validators import validate_choice, validate_integer
from .exceptions import InputError, SupportError, OptimizationError, NumericalError
from .family import UnnormalizedDensity, ChainSample, FamilyGrid
from .settings import SamplerConfig, STREAM_SKLD, default_skld_size

logger = logging.getLogger(__name__)

METHODS = ("mc", "laplace", "euclidean")
ORDERS = ("first", "second")

_EPS = np.finfo(float).eps
_GRAD_STEP = _EPS ** (1 / 3)
_HESS_STEP = _EPS ** (1 / 4)
_THIRD_STEP = _EPS ** (1 / 5)
_NEWTON_POLISH = 8
_MODE_GRAD_TOL = 1e-6


def _log_ratio(d1: UnnormalizedDensity, d2: UnnormalizedDensity, draws: np.ndarray) -> np.ndarray:
    log1 = d1.log_weights(draws)
    log2 = d2.log_weights(draws)
    if np.any(np.isneginf(log1) | np.isneginf(log2)):
        raise SupportError(f"log ratio of {d1.label} and {d2.label} is undefined at a sample point")
    return log1 - log2


def skld_mc(d1: UnnormalizedDensity, d2: UnnormalizedDensity, s1: ChainSample, s2: ChainSample) -> float:
    """
    Monte Carlo SKLD: mean over s1 of log(nu_1 / nu_2) minus mean over s2 of log(nu_1 / nu_2).

    Parameters
    ----------
    d1, d2 : UnnormalizedDensity
        The two densities.

    s1, s2 : ChainSample
        Draws from the normalized d1 and d2.

    Raises
    ------
    SupportError
        If either density is zero at a sample point.
    """
    if d1.dim != d2.dim:
        raise InputError("densities must share the state dimension")
    return float(np.mean(_log_ratio(d1, d2, s1.draws)) - np.mean(_log_ratio(d1, d2, s2.draws)))


def skld_mc_se(d1: UnnormalizedDensity, d2: UnnormalizedDensity, s1: ChainSample, s2: ChainSample) -> float:
    """Naive standard error of skld_mc, treating both samples as iid."""
    r1 = _log_ratio(d1, d2, s1.draws)
    r2 = _log_ratio(d1, d2, s2.draws)
    return float(np.sqrt(np.var(r1) / r1.shape[0] + np.var(r2) / r2.shape[0]))


def _steps(x: np.ndarray, base: float) -> np.ndarray:
    return base * (1.0 + np.abs(x))


def _gradient(f: Callable, x: np.ndarray) -> np.ndarray:
    p = x.shape[0]
    h = _steps(x, _GRAD_STEP)
    shifts = np.diag(h)
    values = f(np.vstack([x + shifts, x - shifts]))
    return (values[:p] - values[p:]) / (2.0 * h)


def _hessian(f: Callable, x: np.ndarray) -> np.ndarray:
    """Central-difference Hessian from one batched evaluation of 4 p^2 points."""
    p = x.shape[0]
    h = _steps(x, _HESS_STEP)
    eye = np.diag(h)
    points = []
    for i in range(p):
        for j in range(p):
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                points.append(x + si * eye[i] + sj * eye[j])
    values = f(np.array(points)).reshape(p, p, 4)
    hess = (values[..., 0] - values[..., 1] - values[..., 2] + values[..., 3]) / (4.0 * np.outer(h, h))
    return (hess + hess.T) / 2.0


def _third(f: Callable, x: np.ndarray) -> np.ndarray:
    """Third derivatives T[i, j, k] by central differences of the Hessian along k."""
    p = x.shape[0]
    h = _steps(x, _THIRD_STEP)
    out = np.empty((p, p, p))
    for k in range(p):
        step = np.zeros(p)
        step[k] = h[k]
        out[:, :, k] = (_hessian(f, x + step) - _hessian(f, x - step)) / (2.0 * h[k])
    # symmetrize over index permutations
    return (
        out
        + out.transpose(0, 2, 1)
        + out.transpose(1, 0, 2)
        + out.transpose(1, 2, 0)
        + out.transpose(2, 0, 1)
        + out.transpose(2, 1, 0)
    ) / 6.0


def _batch(density: UnnormalizedDensity) -> Callable:
    def f(points: np.ndarray) -> np.ndarray:
        return density.log_weights(np.atleast_2d(points))

    return f


def find_mode(density: UnnormalizedDensity, x0=None) -> np.ndarray:
    """
    argmax of log nu by BFGS, polished with finite-difference Newton steps.

    Raises
    ------
    OptimizationError
        If the gradient at the final point is not small.
    NumericalError
        If the Hessian at the mode is not negative definite.
    """
    f = _batch(density)
    x = np.zeros(density.dim) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != density.dim:
        raise InputError(f"starting point has {x.shape[0]} coordinates, density expects {density.dim}")
    if not np.isfinite(f(x)[0]):
        raise OptimizationError(f"log density {density.label} is not finite at the starting point")

    def objective(z):
        value = f(z)[0]
        return -value if np.isfinite(value) else np.inf

    result = minimize(objective, x, jac=lambda z: -_gradient(f, z), method="BFGS", options={"gtol": 1e-9})
    x = result.x
    hess = _hessian(f, x)
    for _ in range(_NEWTON_POLISH):
        grad = _gradient(f, x)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise NumericalError(f"singular Hessian at the mode of {density.label}")
        x = x - step
        hess = _hessian(f, x)
        if np.max(np.abs(step)) <= 1e-12 * (1.0 + np.max(np.abs(x))):
            break
    grad = _gradient(f, x)
    if not np.all(np.isfinite(grad)) or np.max(np.abs(grad)) > _MODE_GRAD_TOL * (1.0 + np.max(np.abs(hess))):
        raise OptimizationError(f"mode search for {density.label} did not converge: {result.message}")
    try:
        np.linalg.cholesky(-hess)
    except np.linalg.LinAlgError:
        raise NumericalError(f"Hessian at the mode of {density.label} is not negative definite")
    return x


def _laplace_expectation(j: Callable, base: Callable, mode: np.ndarray, order: str) -> float:
    """
    Expectation of J under the density exp(base), expanded around the mode of base.
    """
    value = float(j(mode)[0])
    if order == "first":
        return value
    inv = np.linalg.inv(_hessian(base, mode))
    j_grad = _gradient(j, mode)
    j_hess = _hessian(j, mode)
    skew = np.einsum("a,bcd,ab,cd->", j_grad, _third(base, mode), inv, inv)
    return value + 0.5 * skew - 0.5 * float(np.sum(j_hess * inv))


def skld_laplace(
    d1: UnnormalizedDensity,
    d2: UnnormalizedDensity,
    order: str = "second",
    x0=None,
) -> float:
    """
    SKLD by the modified Laplace approximation with J = log nu_1 - log nu_2.

    E_1 J is expanded around x1 = argmax log nu_1 and E_2 J around x2 = argmax log nu_2;
    the SKLD is their difference. ``order='first'`` keeps only J(x1) - J(x2). The second order
    expansion is exact for two Gaussian densities up to finite-difference error.

    Parameters
    ----------
    d1, d2 : UnnormalizedDensity
        Densities with continuous support, smooth near their modes.

    order : {'first', 'second'}, default 'second'

    x0 : array_like, optional
        Starting point of the first mode search; the second starts from the first mode.

    Examples
    --------
    >>> from gisdesign.models import gaussian_density
    >>> round(skld_laplace(gaussian_density((0.0, 1.0)), gaussian_density((1.0, 2.0))), 6)
    1.75
    """
    validate_choice("order", order, ORDERS)
    for dens in (d1, d2):
        if dens.support != "continuous-vector":
            raise InputError("the Laplace approximation needs a continuous support")
    if d1.dim != d2.dim:
        raise InputError("densities must share the state dimension")
    g = _batch(d1)
    h = _batch(d2)

    def j(points):
        return g(points) - h(points)

    mode1 = find_mode(d1, x0)
    mode2 = find_mode(d2, mode1)
    return _laplace_expectation(j, g, mode1, order) - _laplace_expectation(j, h, mode2, order)


def _chain(grid: FamilyGrid, index: int, size: int, config: SamplerConfig, slot: int) -> ChainSample:
    seed = Streams.seed(config.seed, STREAM_SKLD, index, slot)
    return grid.sample(index, size, burnin=config.burnin, seed=seed)


def _run(tasks, fn, threads: int):
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(fn, tasks))
    return [fn(t) for t in tasks]


def pairwise_divergence_matrix(
    grid: FamilyGrid,
    method: str = "mc",
    config: SamplerConfig = SamplerConfig(),
    *,
    skld_size: int = default_skld_size,
    order: str = "second",
    per_pair: bool = False,
) -> np.ndarray:
    """
    |Xi| x |Xi| symmetric matrix of distances between grid densities, zero diagonal.

    Parameters
    ----------
    grid : FamilyGrid
        Family; 'mc' needs its sampler.

    method : {'mc', 'laplace', 'euclidean'}, default 'mc'
        Monte Carlo SKLD, Laplace SKLD, or Euclidean distance between the grid points
        after scaling every coordinate to [0, 1].

    config : SamplerConfig
        Master seed, burn-in and worker count for 'mc'.

    skld_size : int, default 3000
        Draws per chain for 'mc'.

    order : {'first', 'second'}, default 'second'
        Order of the Laplace expansion.

    per_pair : bool, default False
        Draw fresh chains for every pair from the stream of (i, j). By default each grid point
        has one chain shared by all of its pairs.

    Returns
    -------
    numpy.ndarray
        Monte Carlo entries may be slightly negative; they are reported as computed.
    """
    validate_choice("method", method, METHODS)
    size = len(grid)
    if method == "euclidean":
        return cdist(grid.scaled_points(), grid.scaled_points())
    pairs = [(i, j) for i in range(size) for j in range(i + 1, size)]
    out = np.zeros((size, size))
    if not pairs:
        return out
    threads = config.threads

    if method == "laplace":
        values = _run(pairs, lambda p: skld_laplace(grid.density(p[0]), grid.density(p[1]), order), threads)
    else:
        validate_integer("skld_size", skld_size, min_value=2)
        if per_pair:

            def pair_value(p):
                slot = Streams.pair_slot(p[0], p[1], size) + 1
                s1 = _chain(grid, p[0], skld_size, config, slot)
                s2 = _chain(grid, p[1], skld_size, config, slot)
                return skld_mc(grid.density(p[0]), grid.density(p[1]), s1, s2)

            values = _run(pairs, pair_value, threads)
        else:
            chains = _run(list(range(size)), lambda i: _chain(grid, i, skld_size, config, 0), threads)
            values = _run(
                pairs, lambda p: skld_mc(grid.density(p[0]), grid.density(p[1]), chains[p[0]], chains[p[1]]), threads
            )
    for (i, j), value in zip(pairs, values):
        out[i, j] = out[j, i] = value
    logger.info(f"{method} divergences for {len(pairs)} pairs")
    return out
