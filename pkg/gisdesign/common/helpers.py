from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from ..settings import _PINV_RCOND


class LogSpace:
    """
    Group of log-space reductions over matrices of log density values.
    Rows are sample points, columns are densities.
    """

    @staticmethod
    def log_mixture(log_phi: np.ndarray, a: np.ndarray, d: np.ndarray) -> np.ndarray:
        """
        Row-wise log of sum_j a_j * phi_j(x) / d_j.

        Rows where every phi_j is zero give -inf.
        """
        log_terms = log_phi + (np.log(a) - np.log(d))
        with np.errstate(divide="ignore", invalid="ignore"):
            return logsumexp(log_terms, axis=-1)

    @staticmethod
    def softmax_rows(logits: np.ndarray) -> np.ndarray:
        """
        Row-wise softmax computed through log-sum-exp.

        Rows with all entries -inf are returned as NaN.
        """
        with np.errstate(divide="ignore", invalid="ignore"):
            lse = logsumexp(logits, axis=-1, keepdims=True)
            return np.exp(logits - lse)

    @staticmethod
    def exp_ratio(log_num: np.ndarray, log_den: np.ndarray) -> np.ndarray:
        """
        exp(log_num - log_den) with 0 wherever the numerator is zero.
        """
        out = np.zeros(np.broadcast(log_num, log_den).shape)
        positive = np.broadcast_to(np.isfinite(log_num), out.shape)
        diff = np.broadcast_to(log_num, out.shape)[positive] - np.broadcast_to(log_den, out.shape)[positive]
        out[positive] = np.exp(diff)
        return out


class Matrix:
    """
    Linear algebra helpers for symmetric covariance-type matrices.
    """

    @staticmethod
    def symmetrize(m: np.ndarray) -> np.ndarray:
        return (m + m.T) / 2.0

    @staticmethod
    def pinv_sym(m: np.ndarray, rcond: float = _PINV_RCOND) -> Tuple[np.ndarray, int, float]:
        """
        Moore-Penrose inverse of a symmetric matrix via eigendecomposition.

        Eigenvalues with absolute value below rcond * max|eigenvalue| are treated as zero.

        Returns
        -------
        tuple
            pseudo-inverse, numerical rank and condition number on the retained spectrum.
        """
        eigval, eigvec = np.linalg.eigh(Matrix.symmetrize(m))
        scale = np.max(np.abs(eigval)) if eigval.size else 0.0
        if scale == 0.0:
            return np.zeros_like(m), 0, np.inf
        keep = np.abs(eigval) > rcond * scale
        inv = np.zeros_like(eigval)
        inv[keep] = 1.0 / eigval[keep]
        pinv = (eigvec * inv) @ eigvec.T
        cond = scale / np.min(np.abs(eigval[keep]))
        return Matrix.symmetrize(pinv), int(keep.sum()), float(cond)

    @staticmethod
    def neg_log_det(m: np.ndarray) -> float:
        """
        -log det(m) for a symmetric matrix; +inf when m is not positive definite.
        """
        if m.size == 0:
            return 0.0
        sign, logdet = np.linalg.slogdet(Matrix.symmetrize(m))
        if sign <= 0 or not np.isfinite(logdet):
            return np.inf
        return float(-logdet)

    @staticmethod
    def min_eigenvalue(m: np.ndarray) -> float:
        if m.size == 0:
            return 0.0
        return float(np.linalg.eigvalsh(Matrix.symmetrize(m))[0])

    @staticmethod
    def as_columns(z) -> np.ndarray:
        """
        Return observations as a 2-D float array with rows in time order.
        """
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z[:, np.newaxis]
        return z


class Streams:
    """
    Counter-based seed derivation.

    A chain is identified by (master seed, stream id, grid index, slot). The tuple is fed to
    numpy.random.SeedSequence as entropy plus spawn key, so any single chain can be regenerated
    without generating the others.
    """

    @staticmethod
    def seed(master_seed: int, stream: int, index: int, slot: int = 0) -> int:
        sequence = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream), int(index), int(slot)))
        return int(sequence.generate_state(1, dtype=np.uint64)[0])

    @staticmethod
    def generator(seed: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(int(seed)))

    @staticmethod
    def pair_slot(i: int, j: int, size: int) -> int:
        """Slot id of an unordered pair (i, j) of grid indices."""
        i, j = sorted((int(i), int(j)))
        return i * int(size) + j

