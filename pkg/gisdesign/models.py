"""
Built-in families: the centred autologistic model on a torus lattice and a Gaussian kernel family.
"""
import itertools
import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import expit, logit, logsumexp

from .common.helpers import Streams
from .common.validators import validate_integer, validate_real, validate_choice
from .exceptions import InputError
from .family import FamilyGrid, UnnormalizedDensity, ChainSample
from .settings import default_burnin, default_scan, _ENUMERATION_MAX_SITES, _NEIGHBOURS_PER_SITE

logger = logging.getLogger(__name__)

SCANS = ("row-major", "random", "checkerboard")
_ENUMERATION_CHUNK = 1 << 16


class AutologisticModel:
    """
    Centred autologistic model on a rows x cols torus with nearest-neighbour dependence.

    A state is a flat 0/1 vector in row-major order. Each site has w = 4 neighbours
    (up, down, left, right with wrap-around) and conditional probability

        logit P(x_i = 1 | rest) = logit(kappa) + (gamma / w) sum_{j in nb(i)} (x_j - kappa).

    Parameters
    ----------
    rows, cols : int
        Lattice dimensions, at least 2 each.

    gamma : float
        Dependence parameter.

    kappa : float
        Marginal probability in (0, 1) at gamma = 0.

    scan : {'row-major', 'random', 'checkerboard'}, default 'row-major'
        Gibbs site order. 'checkerboard' updates the two colour classes in turn and needs
        even rows and cols.

    Examples
    --------
    >>> model = AutologisticModel(3, 3, gamma=0.0, kappa=0.5)
    >>> model.exact_logZ()
    6.238324625039508
    """

    def __init__(self, rows: int, cols: int, gamma: float, kappa: float, scan: str = default_scan):
        validate_integer("rows", rows, min_value=2)
        validate_integer("cols", cols, min_value=2)
        validate_real("gamma", gamma)
        validate_real("kappa", kappa, min_value=0.0, max_value=1.0, inclusive=False)
        validate_choice("scan", scan, SCANS)
        if scan == "checkerboard" and (rows % 2 or cols % 2):
            raise InputError("checkerboard scan needs even rows and cols")
        self.rows = int(rows)
        self.cols = int(cols)
        self.gamma = float(gamma)
        self.kappa = float(kappa)
        self.scan = scan
        self.neighbours = torus_neighbours(self.rows, self.cols)

    def __repr__(self):
        dic = {
            "lattice": f"{self.rows}x{self.cols} torus",
            "gamma": self.gamma,
            "kappa": self.kappa,
            "scan": self.scan,
        }
        return repr(pd.Series(dic))

    @property
    def sites(self) -> int:
        return self.rows * self.cols

    @property
    def w(self) -> int:
        return _NEIGHBOURS_PER_SITE

    @property
    def linear_coefficient(self) -> float:
        return float(logit(self.kappa)) - self.gamma * self.kappa

    def conditional_table(self) -> np.ndarray:
        """P(x_i = 1 | neighbour sum s) for s = 0..w."""
        s = np.arange(self.w + 1)
        return expit(logit(self.kappa) + self.gamma / self.w * (s - self.w * self.kappa))

    def log_pmf(self, states) -> np.ndarray:
        """
        Unnormalized log pmf of flat states, vectorised over rows:
        (logit kappa - gamma kappa) sum x_i + gamma / (2 w) sum_i sum_{j in nb(i)} x_i x_j.
        """
        x = np.asarray(states, dtype=float)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.shape[1] != self.sites:
            raise InputError(f"states have {x.shape[1]} sites, the lattice has {self.sites}")
        pairs = np.einsum("ni,ni->n", x, x[:, self.neighbours].sum(axis=2))
        return self.linear_coefficient * x.sum(axis=1) + self.gamma / (2 * self.w) * pairs

    def density(self) -> UnnormalizedDensity:
        return UnnormalizedDensity(
            self.log_pmf, dim=self.sites, support="binary-lattice", label=(self.gamma, self.kappa)
        )

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.sites) < self.kappa).astype(np.int8)

    def sweeps(self, size: int, burnin: int, rng: np.random.Generator) -> np.ndarray:
        """
        Run `burnin` + `size` Gibbs sweeps and keep the state after each of the last `size`.
        """
        validate_integer("size", size, min_value=1)
        validate_integer("burnin", burnin, min_value=0)
        table = self.conditional_table()
        state = self.initial_state(rng)
        draws = np.empty((size, self.sites))
        if self.scan == "checkerboard":
            colours = _colour_classes(self.rows, self.cols)
            for t in range(burnin + size):
                for sites in colours:
                    sums = state[self.neighbours[sites]].sum(axis=1)
                    state[sites] = rng.random(sites.shape[0]) < table[sums]
                if t >= burnin:
                    draws[t - burnin] = state
            return draws
        probs = table.tolist()
        nbs = [tuple(row) for row in self.neighbours.tolist()]
        current = state.tolist()
        m = self.sites
        for t in range(burnin + size):
            uniforms = rng.random(m).tolist()
            if self.scan == "random":
                order = rng.integers(0, m, size=m).tolist()
            else:
                order = range(m)
            for step, i in enumerate(order):
                a, b, c, d = nbs[i]
                current[i] = 1 if uniforms[step] < probs[current[a] + current[b] + current[c] + current[d]] else 0
            if t >= burnin:
                draws[t - burnin] = current
        return draws

    def exact_logZ(self) -> float:
        """
        log of the sum of exp(log pmf) over all 2^m states, by enumeration.

        Raises
        ------
        InputError
            If the lattice has more than 20 sites.
        """
        m = self.sites
        if m > _ENUMERATION_MAX_SITES:
            raise InputError(f"exact enumeration is limited to {_ENUMERATION_MAX_SITES} sites, got {m}")
        total = 1 << m
        shifts = np.arange(m, dtype=np.int64)
        parts = []
        for start in range(0, total, _ENUMERATION_CHUNK):
            codes = np.arange(start, min(start + _ENUMERATION_CHUNK, total), dtype=np.int64)
            states = ((codes[:, np.newaxis] >> shifts) & 1).astype(float)
            parts.append(logsumexp(self.log_pmf(states)))
        return float(logsumexp(parts))


def torus_neighbours(rows: int, cols: int) -> np.ndarray:
    """
    (rows * cols, 4) flat indices of the up, down, left and right neighbours of every site.

    On a 2-wide dimension both neighbours along it are the same site and appear twice.
    """
    r, c = np.divmod(np.arange(rows * cols), cols)
    up = ((r - 1) % rows) * cols + c
    down = ((r + 1) % rows) * cols + c
    left = r * cols + (c - 1) % cols
    right = r * cols + (c + 1) % cols
    return np.column_stack([up, down, left, right])


def _colour_classes(rows: int, cols: int) -> Tuple[np.ndarray, np.ndarray]:
    r, c = np.divmod(np.arange(rows * cols), cols)
    parity = (r + c) % 2
    return np.flatnonzero(parity == 0), np.flatnonzero(parity == 1)


def _site_index(state: np.ndarray, site: Union[int, Tuple[int, int]]) -> int:
    rows, cols = state.shape
    if isinstance(site, tuple):
        r, c = site
        if not (0 <= r < rows and 0 <= c < cols):
            raise InputError(f"site {site} is outside the {rows}x{cols} lattice")
        return r * cols + c
    validate_integer("site", site, min_value=0, max_value=rows * cols - 1)
    return int(site)


def _as_lattice(state) -> np.ndarray:
    x = np.asarray(state)
    if x.ndim != 2:
        raise InputError("a lattice state must be a 2-D array")
    if not np.all((x == 0) | (x == 1)):
        raise InputError("a lattice state must be binary")
    return x


def autologistic_conditional_p(state, site: Union[int, Tuple[int, int]], gamma: float, kappa: float) -> float:
    """
    P(x_site = 1 | neighbours) on the torus given by the shape of `state`.

    `site` is a row-major flat index or a (row, col) pair.

    Examples
    --------
    >>> autologistic_conditional_p(np.ones((3, 3)), 4, gamma=4.0, kappa=0.5)
    0.8807970779778823
    """
    x = _as_lattice(state)
    model = AutologisticModel(x.shape[0], x.shape[1], gamma, kappa)
    i = _site_index(x, site)
    s = int(x.reshape(-1)[model.neighbours[i]].sum())
    return float(model.conditional_table()[s])


def autologistic_log_pmf_unnormalized(state, gamma: float, kappa: float) -> float:
    x = _as_lattice(state)
    model = AutologisticModel(x.shape[0], x.shape[1], gamma, kappa)
    return float(model.log_pmf(x.reshape(1, -1))[0])


def autologistic_gibbs(model: AutologisticModel, n: int, burnin: int = default_burnin, seed: int = 0) -> ChainSample:
    """
    Single-site Gibbs chain of `n` sweeps after `burnin` sweeps; one row per sweep.

    Identical seeds give identical chains.
    """
    draws = model.sweeps(n, burnin, Streams.generator(seed))
    return ChainSample(draws, proposal_index=0, kind="markov", seed=seed, burnin_discarded=burnin)


def autologistic_exact_logZ(model: AutologisticModel) -> float:
    return model.exact_logZ()


def _product(*axes) -> np.ndarray:
    arrays = [np.atleast_1d(np.asarray(axis, dtype=float)) for axis in axes]
    return np.array(list(itertools.product(*arrays)))


class AutologisticFamily(FamilyGrid):
    """
    Grid of autologistic models with parameter points (gamma, kappa) on one lattice.

    Parameters
    ----------
    points : array_like
        (|Xi|, 2) array of (gamma, kappa) pairs.

    rows, cols : int
        Torus dimensions.

    scan : str, default 'row-major'
        Gibbs scan of the built-in sampler.
    """

    def __init__(self, points, rows: int, cols: int, scan: str = default_scan):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError("autologistic grid points are (gamma, kappa) pairs")
        # validates every point once up front
        self._models = [AutologisticModel(rows, cols, g, k, scan) for g, k in pts]
        self.rows = int(rows)
        self.cols = int(cols)
        self.scan = scan
        super().__init__(
            pts,
            self._make_density,
            sampler=self._sample,
            chain_kind="markov",
            coordinate_names=["gamma", "kappa"],
        )

    @classmethod
    def from_axes(cls, gamma, kappa, rows: int, cols: int, scan: str = default_scan) -> "AutologisticFamily":
        """Cartesian product of the gamma and kappa values, gamma varying slowest."""
        return cls(_product(gamma, kappa), rows, cols, scan)

    def model(self, index: int) -> AutologisticModel:
        return self._models[int(index)]

    def _model_at(self, point) -> AutologisticModel:
        return self._models[self.index_of(point)]

    def _make_density(self, point) -> UnnormalizedDensity:
        return self._model_at(point).density()

    def _sample(self, point, size, burnin, rng) -> np.ndarray:
        return self._model_at(point).sweeps(size, burnin, rng)

    def exact_logZ(self, index: int) -> float:
        return self.model(index).exact_logZ()

    def exact_log_ratio(self, index: int, reference: int) -> float:
        """log of the normalizer ratio of grid point `index` to grid point `reference`."""
        return self.exact_logZ(index) - self.exact_logZ(reference)


class GaussianFamily(FamilyGrid):
    """
    Gaussian kernels log phi(x) = -(x - mean)^2 / (2 sd^2) with the normalizer left out.

    The true normalizer sd * sqrt(2 pi) is available as an oracle; chains are iid draws.

    Parameters
    ----------
    points : array_like
        (|Xi|, 2) array of (mean, sd) pairs, sd > 0.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError("Gaussian grid points are (mean, sd) pairs")
        if np.any(pts[:, 1] <= 0):
            raise InputError("sd must be positive")
        super().__init__(pts, gaussian_density, sampler=gaussian_sampler, chain_kind="iid", coordinate_names=["mean", "sd"])

    @classmethod
    def from_axes(cls, mean, sd) -> "GaussianFamily":
        return cls(_product(mean, sd))

    def normalizer(self, index: int) -> float:
        return float(self.points[int(index), 1] * math.sqrt(2.0 * math.pi))

    def normalizer_ratio(self, index: int, reference: int) -> float:
        """c_index / c_reference = sd_index / sd_reference."""
        return float(self.points[int(index), 1] / self.points[int(reference), 1])

    def exact_ratios(self, indices: Sequence[int], reference: Optional[int] = None) -> np.ndarray:
        """Normalizer ratios of `indices` to the first of them (or `reference`)."""
        reference = indices[0] if reference is None else reference
        return np.array([self.normalizer_ratio(i, reference) for i in indices])


def gaussian_density(point) -> UnnormalizedDensity:
    mean, sd = (float(v) for v in np.asarray(point, dtype=float).reshape(-1))
    if sd <= 0:
        raise InputError("sd must be positive")
    scale = 2.0 * sd ** 2

    def log_weight(x: np.ndarray) -> np.ndarray:
        return -((x[:, 0] - mean) ** 2) / scale

    return UnnormalizedDensity(log_weight, dim=1, label=(mean, sd))


def gaussian_sampler(point, size: int, burnin: int, rng: np.random.Generator) -> np.ndarray:
    mean, sd = (float(v) for v in np.asarray(point, dtype=float).reshape(-1))
    return rng.normal(mean, sd, size=size)[:, np.newaxis]
