"""
Core data model: unnormalized densities, parameter grids, chains, skeleton sets and sample banks.
"""
import logging
import threading
from typing import Callable, Optional, Sequence, List, Tuple

import numpy as np
import pandas as pd

from .common.helpers import LogSpace, Matrix, Streams
from .common.validators import validate_integer, validate_weights, validate_choice
from .exceptions import InputError, EvaluationError

logger = logging.getLogger(__name__)

SUPPORTS = ("continuous-vector", "binary-lattice")
CHAIN_KINDS = ("iid", "markov")


class UnnormalizedDensity:
    """
    Evaluator of log phi(x) for a density known only up to its normalizing constant.

    Parameters
    ----------
    log_weight : callable
        Vectorised log weight. Takes an (n, dim) array of points and returns n values of log phi.
        -inf marks points outside the support; NaN is never a valid value.

    dim : int
        State dimension.

    support : {'continuous-vector', 'binary-lattice'}, default 'continuous-vector'
        Kind of state space. Binary lattice states are stored as 0/1 floats.

    label : array_like, default ()
        Parameter point xi the density belongs to.

    Examples
    --------
    >>> std_normal = UnnormalizedDensity(lambda x: -0.5 * x[:, 0] ** 2, dim=1, label=(0.0, 1.0))
    >>> std_normal([1.0])
    -0.5
    """

    def __init__(
        self,
        log_weight: Callable[[np.ndarray], np.ndarray],
        dim: int,
        *,
        support: str = "continuous-vector",
        label: Sequence[float] = (),
    ):
        validate_integer("dim", dim, min_value=1)
        validate_choice("support", support, SUPPORTS)
        self._log_weight = log_weight
        self.dim = int(dim)
        self.support = support
        self.label = tuple(float(v) for v in np.atleast_1d(label))

    def __repr__(self):
        dic = {"label": self.label, "dim": self.dim, "support": self.support}
        return repr(pd.Series(dic))

    def log_weights(self, points) -> np.ndarray:
        """
        Evaluate log phi at every row of `points`.

        Raises
        ------
        InputError
            If the points do not have `dim` coordinates.
        EvaluationError
            If the log weight returns NaN or +inf.
        """
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x.reshape(1, -1) if x.shape[0] == self.dim else x.reshape(-1, 1)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise InputError(f"points have {x.shape[-1]} coordinates, density {self.label} expects {self.dim}")
        values = np.asarray(self._log_weight(x), dtype=float).reshape(-1)
        if values.shape[0] != x.shape[0]:
            raise EvaluationError(f"density {self.label} returned {values.shape[0]} values for {x.shape[0]} points")
        if np.isnan(values).any() or np.isposinf(values).any():
            raise EvaluationError(f"density {self.label} returned NaN or +inf log weight")
        return values

    def __call__(self, x) -> float:
        point = np.asarray(x, dtype=float).reshape(-1)
        if point.shape[0] != self.dim:
            raise InputError(f"point has {point.shape[0]} coordinates, density {self.label} expects {self.dim}")
        return float(self.log_weights(point.reshape(1, -1))[0])


class ChainSample:
    """
    Time-ordered draws from one proposal, with the seed that reproduces them.

    Parameters
    ----------
    draws : array_like
        (rows, dim) matrix, rows in temporal order. At least two rows.

    proposal_index : int
        Position of the proposal in its skeleton set, or the grid index for cached chains.

    kind : {'iid', 'markov'}
        How the draws were generated.

    seed : int
        64-bit seed that regenerates the draws bit-exactly.

    burnin_discarded : int, default 0
        Number of initial sweeps thrown away.
    """

    def __init__(self, draws, proposal_index: int, kind: str, seed: int, burnin_discarded: int = 0):
        draws = Matrix.as_columns(draws)
        if draws.flags.writeable:
            draws = draws.copy()
        if draws.shape[0] < 2:
            raise InputError("a chain needs at least 2 rows")
        validate_choice("kind", kind, CHAIN_KINDS)
        validate_integer("burnin_discarded", burnin_discarded, min_value=0)
        draws.setflags(write=False)
        self.draws = draws
        self.proposal_index = int(proposal_index)
        self.kind = kind
        self.seed = int(seed)
        self.burnin_discarded = int(burnin_discarded)

    def __len__(self):
        return self.draws.shape[0]

    def __repr__(self):
        dic = {
            "rows": self.draws.shape[0],
            "dim": self.draws.shape[1],
            "proposal_index": self.proposal_index,
            "kind": self.kind,
            "seed": self.seed,
            "burnin_discarded": self.burnin_discarded,
        }
        return repr(pd.Series(dic))

    def relabel(self, proposal_index: int) -> "ChainSample":
        """Same draws attached to another skeleton position."""
        return ChainSample(self.draws, proposal_index, self.kind, self.seed, self.burnin_discarded)


class FamilyGrid:
    """
    Ordered finite set of parameter points, each yielding an unnormalized density.

    The sequence order is the canonical order of every vector or matrix indexed by the grid.

    Parameters
    ----------
    points : array_like
        (|Xi|, p) parameter points, pairwise distinct. A 1-D input is read as p = 1.

    make_density : callable
        Maps a parameter point (1-D array) to an UnnormalizedDensity.

    sampler : callable, optional
        ``sampler(point, size, burnin, rng)`` returns a (size, dim) array of draws from the normalized
        density at `point`. Required for every operation that generates chains.

    chain_kind : {'iid', 'markov'}, default 'markov'
        Kind of the draws the sampler produces.

    coordinate_names : sequence of str, optional
        Names of the parameter coordinates. Default xi_1..xi_p.
    """

    def __init__(
        self,
        points,
        make_density: Callable[[np.ndarray], UnnormalizedDensity],
        *,
        sampler: Optional[Callable] = None,
        chain_kind: str = "markov",
        coordinate_names: Optional[Sequence[str]] = None,
    ):
        pts = Matrix.as_columns(points).copy()
        if pts.shape[0] < 1:
            raise InputError("a grid needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise InputError("grid points must be finite")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise InputError("grid points must be pairwise distinct")
        validate_choice("chain_kind", chain_kind, CHAIN_KINDS)
        pts.setflags(write=False)
        self.points = pts
        self.make_density = make_density
        self.sampler = sampler
        self.chain_kind = chain_kind
        if coordinate_names is None:
            coordinate_names = [f"xi_{i + 1}" for i in range(pts.shape[1])]
        if len(coordinate_names) != pts.shape[1]:
            raise InputError("one coordinate name per parameter coordinate is required")
        self.coordinate_names = list(coordinate_names)
        self._densities = {}
        self._lock = threading.Lock()
        self._state_dim = None

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        dic = {
            "size": len(self),
            "coordinates": self.coordinate_names,
            "min": tuple(self.scaling[0]),
            "max": tuple(self.scaling[1]),
            "chain_kind": self.chain_kind,
        }
        return repr(pd.Series(dic))

    @property
    def scaling(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Per-coordinate (min, max) used for Euclidean normalization.
        """
        return self.points.min(axis=0), self.points.max(axis=0)

    def scaled_points(self) -> np.ndarray:
        """
        Grid points with every coordinate mapped to [0, 1]. Constant coordinates map to 0.
        """
        lo, hi = self.scaling
        span = np.where(hi > lo, hi - lo, 1.0)
        return (self.points - lo) / span

    @property
    def state_dim(self) -> int:
        if self._state_dim is None:
            self._state_dim = self.density(0).dim
        return self._state_dim

    def density(self, index: int) -> UnnormalizedDensity:
        """
        Density at grid point `index` (built once and cached).
        """
        index = int(index)
        if not 0 <= index < len(self):
            raise InputError(f"grid index {index} out of range 0..{len(self) - 1}")
        density = self._densities.get(index)
        if density is None:
            density = self.make_density(np.array(self.points[index]))
            with self._lock:
                self._densities.setdefault(index, density)
                density = self._densities[index]
            if self._state_dim is not None and density.dim != self._state_dim:
                raise InputError("densities of one grid must share the state dimension")
        return density

    def densities(self, indices: Sequence[int]) -> List[UnnormalizedDensity]:
        return [self.density(i) for i in indices]

    def index_of(self, point, atol: float = 1e-9) -> int:
        """
        Grid index of a parameter point.

        Raises
        ------
        InputError
            If no grid point matches within `atol`.
        """
        target = np.atleast_1d(np.asarray(point, dtype=float))
        if target.shape[0] != self.points.shape[1]:
            raise InputError(f"parameter point has {target.shape[0]} coordinates, grid has {self.points.shape[1]}")
        hits = np.flatnonzero(np.all(np.abs(self.points - target) <= atol, axis=1))
        if hits.size == 0:
            raise InputError(f"point {tuple(target)} is not on the grid")
        return int(hits[0])

    def sample(self, index: int, size: int, *, burnin: int = 0, seed: int = 0, proposal_index: Optional[int] = None) -> ChainSample:
        """
        Draw a chain of `size` rows from the density at grid point `index`.

        The chain is a deterministic function of (index, size, burnin, seed).
        """
        if self.sampler is None:
            raise InputError("the grid has no sampler")
        validate_integer("size", size, min_value=2)
        validate_integer("burnin", burnin, min_value=0)
        rng = Streams.generator(seed)
        draws = self.sampler(np.array(self.points[int(index)]), int(size), int(burnin), rng)
        return ChainSample(
            draws,
            proposal_index=int(index) if proposal_index is None else proposal_index,
            kind=self.chain_kind,
            seed=seed,
            burnin_discarded=burnin if self.chain_kind == "markov" else 0,
        )


class SkeletonSet:
    """
    k distinct grid indices serving as proposals, with one reference index (q_1).

    The reference is stored first; the remaining indices keep their given order.

    Parameters
    ----------
    indices : sequence of int
        Distinct grid indices.

    reference : int, optional
        Grid index of q_1. Default is the first entry of `indices`.

    weights : array_like, optional
        Mixing weights a aligned with `indices` as given. Positive, summing to 1.
        If None, the sample bank derives a_l = N_l / N from the chain sizes.
    """

    def __init__(self, indices: Sequence[int], reference: Optional[int] = None, weights=None):
        idx = [int(i) for i in indices]
        if len(idx) < 1:
            raise InputError("a skeleton set needs at least one index")
        if len(set(idx)) != len(idx):
            raise InputError("skeleton indices must be distinct")
        reference = idx[0] if reference is None else int(reference)
        if reference not in idx:
            raise InputError(f"reference {reference} is not in the skeleton set")
        order = [idx.index(reference)] + [p for p, i in enumerate(idx) if i != reference]
        self.indices = tuple(idx[p] for p in order)
        self.reference = reference
        if weights is None:
            self.explicit_weights = False
            self.weights = np.full(len(idx), 1.0 / len(idx))
        else:
            a = validate_weights("weights", weights, size=len(idx))
            self.explicit_weights = True
            self.weights = a[order]
        self.weights.setflags(write=False)

    @property
    def k(self) -> int:
        return len(self.indices)

    def __len__(self):
        return self.k

    def __contains__(self, index) -> bool:
        return int(index) in self.indices

    def __iter__(self):
        return iter(self.indices)

    def __eq__(self, other):
        if not isinstance(other, SkeletonSet):
            return NotImplemented
        return self.reference == other.reference and set(self.indices) == set(other.indices)

    def __hash__(self):
        return hash((self.reference, frozenset(self.indices)))

    def __repr__(self):
        dic = {"indices": self.indices, "reference": self.reference, "weights": tuple(np.round(self.weights, 6))}
        return repr(pd.Series(dic))

    def swap(self, out_index: int, in_index: int) -> "SkeletonSet":
        """
        New set with `out_index` replaced by `in_index` in the same position.
        """
        if int(out_index) == self.reference:
            raise InputError("the reference index cannot be swapped out")
        if int(in_index) in self.indices:
            raise InputError(f"index {in_index} is already in the skeleton set")
        indices = [int(in_index) if i == int(out_index) else i for i in self.indices]
        return SkeletonSet(indices, reference=self.reference, weights=self.weights if self.explicit_weights else None)

    def sorted_indices(self) -> Tuple[int, ...]:
        return tuple(sorted(self.indices))


class SampleBank:
    """
    Stage-1 and stage-2 chains for every proposal of a skeleton set.

    Parameters
    ----------
    skeleton : SkeletonSet
        Proposals; chains are aligned with ``skeleton.indices`` positionally.

    densities : sequence of UnnormalizedDensity
        The k proposal densities phi_1..phi_k in skeleton order.

    stage1 : sequence of ChainSample, optional
        Chains used by reverse logistic regression (sizes N_l). May be omitted when the
        normalizer ratios are known or k = 1.

    stage2 : sequence of ChainSample, optional
        Independent chains used by the importance sampling estimators (sizes n_l).
    """

    def __init__(
        self,
        skeleton: SkeletonSet,
        densities: Sequence[UnnormalizedDensity],
        stage1: Optional[Sequence[ChainSample]] = None,
        stage2: Optional[Sequence[ChainSample]] = None,
    ):
        k = skeleton.k
        if len(densities) != k:
            raise InputError(f"{len(densities)} densities given for a skeleton of size {k}")
        dims = {dens.dim for dens in densities}
        if len(dims) != 1:
            raise InputError("proposal densities must share the state dimension")
        self.skeleton = skeleton
        self.densities = list(densities)
        self.dim = dims.pop()
        self.stage1 = self._check_stage("stage1", stage1)
        self.stage2 = self._check_stage("stage2", stage2)
        if self.stage1 is None and self.stage2 is None:
            raise InputError("a sample bank needs stage-1 or stage-2 chains")
        if self.stage1 is not None and self.stage2 is not None:
            shared = {c.seed for c in self.stage1} & {c.seed for c in self.stage2}
            if shared:
                raise InputError("stage-1 and stage-2 chains must come from disjoint random streams")
        self._cache = {}
        self._lock = threading.Lock()

    def _check_stage(self, name, chains):
        if chains is None or len(chains) == 0:
            return None
        chains = list(chains)
        if len(chains) != self.skeleton.k:
            raise InputError(f"{name} has {len(chains)} chains, skeleton has {self.skeleton.k} proposals")
        for chain in chains:
            if chain.draws.shape[1] != self.dim:
                raise InputError(f"{name} chain has dimension {chain.draws.shape[1]}, densities have {self.dim}")
        return chains

    def __repr__(self):
        dic = {
            "skeleton": self.skeleton.indices,
            "a": tuple(np.round(self.a, 6)),
            "N_l": tuple(self.N_l) if self.stage1 else None,
            "n_l": tuple(self.n_l) if self.stage2 else None,
        }
        return repr(pd.Series(dic))

    @property
    def k(self) -> int:
        return self.skeleton.k

    @property
    def N_l(self) -> np.ndarray:
        if self.stage1 is None:
            raise InputError("the bank has no stage-1 chains")
        return np.array([len(c) for c in self.stage1])

    @property
    def n_l(self) -> np.ndarray:
        if self.stage2 is None:
            raise InputError("the bank has no stage-2 chains")
        return np.array([len(c) for c in self.stage2])

    @property
    def N(self) -> int:
        return int(self.N_l.sum())

    @property
    def n(self) -> int:
        return int(self.n_l.sum())

    @property
    def a(self) -> np.ndarray:
        """
        Mixing weights: the skeleton's explicit weights, otherwise a_l = N_l / N
        (n_l / n when there is no stage 1).
        """
        if self.skeleton.explicit_weights:
            return np.asarray(self.skeleton.weights)
        sizes = self.N_l if self.stage1 is not None else self.n_l
        return sizes / sizes.sum()

    def _log_phi(self, stage: str) -> List[np.ndarray]:
        chains = self.stage1 if stage == "stage1" else self.stage2
        if chains is None:
            raise InputError(f"the bank has no {stage} chains")
        cached = self._cache.get(stage)
        if cached is None:
            cached = [np.column_stack([dens.log_weights(c.draws) for dens in self.densities]) for c in chains]
            with self._lock:
                self._cache.setdefault(stage, cached)
                cached = self._cache[stage]
        return cached

    @property
    def stage1_log_phi(self) -> List[np.ndarray]:
        """Per stage-1 chain, the (N_l, k) matrix of log phi_j at the draws."""
        return self._log_phi("stage1")

    @property
    def stage2_log_phi(self) -> List[np.ndarray]:
        """Per stage-2 chain, the (n_l, k) matrix of log phi_j at the draws."""
        return self._log_phi("stage2")

    def without_stage2(self) -> "SampleBank":
        return SampleBank(self.skeleton, self.densities, stage1=self.stage1)


def log_mixture_denominator(x, densities: Sequence[UnnormalizedDensity], a, d) -> float:
    """
    log sum_j a_j phi_j(x) / d_j, computed by log-sum-exp.

    Parameters
    ----------
    x : array_like
        One state point.

    densities : sequence of UnnormalizedDensity
        Proposal densities phi_1..phi_k.

    a : array_like
        Positive mixing weights, length k.

    d : array_like
        Positive normalizer ratios, length k, d_1 = 1.

    Returns
    -------
    float
        The log denominator; -inf only if every phi_j(x) = 0.

    Examples
    --------
    >>> flat = UnnormalizedDensity(lambda x: np.zeros(x.shape[0]), dim=1)
    >>> log_mixture_denominator([0.0], [flat, flat], [0.5, 0.5], [1.0, 2.0])
    -0.2876820724517809
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    k = len(densities)
    if a.shape != (k,) or d.shape != (k,):
        raise InputError(f"a and d must have length {k}")
    if np.any(d <= 0) or np.any(a <= 0):
        raise InputError("a and d must be positive")
    point = np.asarray(x, dtype=float).reshape(1, -1)
    log_phi = np.array([dens.log_weights(point)[0] for dens in densities])
    return float(LogSpace.log_mixture(log_phi, a, d))
