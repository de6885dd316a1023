import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, List

import numpy as np
import pandas as pd

from .common.validators import validate_integer
from .exceptions import InputError
from .family import FamilyGrid, SampleBank, UnnormalizedDensity
from .gis import Function, check_ratios
from .mcse import (
    LagWindow,
    RLCovariance,
    Stage2Terms,
    Upsilon,
    rl_covariance,
    relative_se,
    joint_sigma22,
    joint_sigma21,
    delta22_hat,
    warn_short_chains,
)
from .rlogistic import RLFit, fit_reverse_logistic
from .settings import default_tol, default_max_iter

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ["log_u_hat", "se_u", "rel_se"]
MEAN_COLUMNS = ["eta_hat", "se_eta"]


class TwoStageEstimator:
    """
    Two-stage estimates over every point of a family grid.

    Stage 1 fits the reverse logistic regression for the proposal normalizer ratios d;
    stage 2 gives u_hat (and eta_hat for a function f) for every grid density with
    spectral variance standard errors.

    Parameters
    ----------
    grid : FamilyGrid
        Targets. Row i of every output belongs to grid point i.

    bank : SampleBank
        Chains of the skeleton proposals. Needs stage-1 chains unless `d` is given or k = 1.

    window : LagWindow, optional
        Default Tukey-Hanning with b = floor(sqrt(n)).

    d : array_like, optional
        Known normalizer ratios. Skips reverse logistic regression.

    threads : int, default 1
        Workers for the per-target profile rows.

    Examples
    --------
    >>> est = TwoStageEstimator(grid, cache.bank(skeleton))
    >>> table = est.profile()
    >>> table.loc[table["rel_se"].idxmax()]
    """

    def __init__(
        self,
        grid: FamilyGrid,
        bank: SampleBank,
        window: Optional[LagWindow] = None,
        d=None,
        threads: int = 1,
        tol: float = default_tol,
        max_iter: int = default_max_iter,
    ):
        if bank.stage2 is None:
            raise InputError("the estimator needs stage-2 chains")
        if bank.dim != grid.state_dim:
            raise InputError(f"bank has dimension {bank.dim}, grid densities have {grid.state_dim}")
        validate_integer("threads", threads, min_value=1)
        self.grid = grid
        self.bank = bank
        self.window = LagWindow() if window is None else window
        self.threads = threads
        self.tol = tol
        self.max_iter = max_iter
        if d is None and bank.k == 1:
            d = [1.0]
        if d is None and bank.stage1 is None:
            raise InputError("without stage-1 chains the normalizer ratios d must be given")
        self.known_d = None if d is None else check_ratios(d, bank.k)
        self._fit = None
        self._rlcov = None
        self._terms = None

    def __repr__(self):
        dic = {
            "grid size": len(self.grid),
            "skeleton": self.bank.skeleton.indices,
            "N": self.bank.N if self.bank.stage1 is not None else 0,
            "n": self.bank.n,
            "d": "known" if self.known_d is not None else "reverse logistic",
            "window": self.window.kind,
        }
        return repr(pd.Series(dic))

    @property
    def fit(self) -> Optional[RLFit]:
        """Reverse logistic fit; None when d is known."""
        if self.known_d is not None:
            return None
        if self._fit is None:
            self._fit = fit_reverse_logistic(self.bank, tol=self.tol, max_iter=self.max_iter)
        return self._fit

    @property
    def rlcov(self) -> Optional[RLCovariance]:
        if self.fit is None:
            return None
        if self._rlcov is None:
            self._rlcov = rl_covariance(self.bank, self.fit, self.window)
        return self._rlcov

    @property
    def d_hat(self) -> np.ndarray:
        return self.known_d if self.known_d is not None else self.fit.d_hat

    @property
    def terms(self) -> Stage2Terms:
        if self._terms is None:
            self._terms = Stage2Terms(self.bank, self.d_hat)
        return self._terms

    @property
    def targets(self) -> List[UnnormalizedDensity]:
        return self.grid.densities(range(len(self.grid)))

    @property
    def stage_ratio(self) -> float:
        """n / N, zero when d is known."""
        return 0.0 if self.fit is None else self.bank.n / self.bank.N

    def _mcse_args(self):
        if self.fit is None:
            return dict(fit=None, rlcov=None, window=self.window, d=self.known_d)
        return dict(fit=self.fit, rlcov=self.rlcov, window=self.window)

    def _row(self, target: UnnormalizedDensity, f: Optional[Function]) -> dict:
        terms = self.terms
        V = None if self.rlcov is None else self.rlcov.V
        ratio = self.stage_ratio
        weights = terms.weights(target, f)
        u = terms.mean(weights.u)
        tau2 = float(terms.combined_sv(weights.u, self.window)[0, 0])
        stage1 = 0.0
        if V is not None and V.size:
            c = terms.c_vector(weights.u)
            stage1 = max(float(c @ V @ c), 0.0)
        sigma2_u = ratio * stage1 + tau2
        n = self.bank.n
        N = self.bank.N if self.fit is not None else 0
        row = {
            "log_u_hat": math.log(u) if u > 0 else -np.inf,
            "se_u": math.sqrt(max(sigma2_u, 0.0) / n),
        }
        if u > 0:
            row["rel_se"] = relative_se(Upsilon(math.sqrt(stage1), math.sqrt(max(tau2, 0.0)), u), N, n)
        else:
            logger.warning(f"u_hat is zero for target {target.label}; relative SE undefined")
            row["rel_se"] = np.nan
        if f is not None:
            if u > 0:
                v = terms.mean(weights.v)
                pairs = [np.column_stack([vc, uc]) for vc, uc in zip(weights.v, weights.u)]
                gamma = terms.combined_sv(pairs, self.window)
                grad = np.array([1.0 / u, -v / u ** 2])
                sigma2_eta = float(grad @ gamma @ grad)
                if V is not None and V.size:
                    e = terms.e_vector(weights, u, v)
                    sigma2_eta += ratio * float(e @ V @ e)
                row["eta_hat"] = v / u
                row["se_eta"] = math.sqrt(max(sigma2_eta, 0.0) / n)
            else:
                row["eta_hat"] = row["se_eta"] = np.nan
        return row

    def profile(self, f: Optional[Function] = None) -> pd.DataFrame:
        """
        Estimates for every grid point.

        Columns: the grid coordinates, log_u_hat, se_u (standard error of u_hat,
        sqrt(sigma2_u_hat / n)), rel_se, and eta_hat, se_eta when `f` is given.
        """
        start = time.time()
        warn_short_chains("stage-2", self.bank.n_l)
        targets = self.targets
        if self.threads > 1 and len(targets) > 1:
            # fit, covariance and stage-2 terms are built once before the workers start
            _ = self.terms, self.rlcov
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                rows = list(executor.map(lambda t: self._row(t, f), targets))
        else:
            rows = [self._row(t, f) for t in targets]
        columns = PROFILE_COLUMNS + (MEAN_COLUMNS if f is not None else [])
        table = pd.DataFrame(rows, columns=columns)
        coords = pd.DataFrame(np.asarray(self.grid.points), columns=self.grid.coordinate_names)
        logger.info(f"profile of {len(targets)} targets in {time.time() - start:.2f} sec")
        return pd.concat([coords, table], axis=1)

    def _labels(self) -> pd.Index:
        if len(self.grid.coordinate_names) == 1:
            return pd.Index(np.asarray(self.grid.points)[:, 0], name=self.grid.coordinate_names[0])
        return pd.MultiIndex.from_arrays(np.asarray(self.grid.points).T, names=self.grid.coordinate_names)

    def sigma22(self) -> pd.DataFrame:
        """Joint asymptotic covariance of u_hat over the grid."""
        matrix = joint_sigma22(self.targets, self.bank, **self._mcse_args())
        return pd.DataFrame(matrix, index=self._labels(), columns=self._labels())

    def sigma21(self) -> pd.DataFrame:
        """Cross covariance of u_hat over the grid with (d_2, ..., d_k)."""
        if self.fit is None:
            raise InputError("the cross covariance with d_hat needs a reverse logistic fit")
        matrix = joint_sigma21(self.targets, self.bank, self.fit, self.rlcov, self.window)
        return pd.DataFrame(matrix, index=self._labels(), columns=[f"d_{j + 2}" for j in range(self.bank.k - 1)])

    def delta22(self, f: Function) -> pd.DataFrame:
        """Joint asymptotic covariance of eta_hat over the grid."""
        matrix = delta22_hat(f, self.targets, self.bank, **self._mcse_args())
        return pd.DataFrame(matrix, index=self._labels(), columns=self._labels())

    def upsilon(self) -> pd.DataFrame:
        """
        Per grid point: sqrt(c^T V c) (column stage1), sqrt(tau2) (stage2) and u_hat (u).
        """
        terms = self.terms
        V = None if self.rlcov is None else self.rlcov.V
        rows = []
        for target in self.targets:
            u = terms.weights(target).u
            tau2 = float(terms.combined_sv(u, self.window)[0, 0])
            stage1 = 0.0
            if V is not None and V.size:
                c = terms.c_vector(u)
                stage1 = math.sqrt(max(float(c @ V @ c), 0.0))
            rows.append(Upsilon(stage1=stage1, stage2=math.sqrt(max(tau2, 0.0)), u=terms.mean(u)))
        return pd.DataFrame(rows, columns=Upsilon._fields, index=self._labels())

    def rel_se(self, N: Optional[int] = None, n: Optional[int] = None) -> pd.Series:
        """
        Relative SE of u_hat over the grid for stage sizes N and n (default: the bank's own).
        """
        N = (self.bank.N if self.fit is not None else 0) if N is None else N
        n = self.bank.n if n is None else n
        table = self.upsilon()
        values = [relative_se(Upsilon(*row), N, n) for row in table.itertuples(index=False)]
        return pd.Series(values, index=table.index, name="rel_se")
