"""Pooled empirical kernel-map representation of two samples.

All second-order statistics operate on coordinate representations with
respect to the pooled system of kernel sections {k_{Z_1}, ..., k_{Z_N}},
N = n + m.  For a pooled kernel matrix K and the column block G_x = K[:, idx_x]:

    m_x = (1/n) * G_x @ 1        (mean-embedding coordinates)
    S_x = (1/n) * G_x @ G_x^T    (non-central second-moment matrix)

and analogously for the second sample.  The matrices are used exactly in
this feature-map form; no basis-Gram correction is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernels import KernelMatrix


@dataclass(frozen=True)
class PooledEmbedding:
    """Mean vectors and second-moment matrices of both samples over the pooled basis.

    ``n`` and ``m`` are the sizes of the index partitions.  When built with
    sample splitting, ``split`` records how many trailing points of each
    sample fed the second-moment matrices (means then use the remainder).
    """

    K: np.ndarray
    idx_x: np.ndarray
    idx_y: np.ndarray
    m_x: np.ndarray
    m_y: np.ndarray
    S_x: np.ndarray
    S_y: np.ndarray
    n: int
    m: int
    split: int | None = None


@dataclass(frozen=True)
class CenteredEmbedding:
    """Centered covariance matrices derived from a :class:`PooledEmbedding`."""

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_pooled: np.ndarray


def _pooled_matrix(K) -> np.ndarray:
    values = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InputError(f"pooled kernel matrix must be square, got shape {values.shape}")
    return values


def _check_partition(N: int, idx_x: np.ndarray, idx_y: np.ndarray) -> None:
    if idx_x.size == 0 or idx_y.size == 0:
        raise InputError("index sets must be nonempty")
    combined = np.concatenate([idx_x, idx_y])
    if combined.size != N or not np.array_equal(np.sort(combined), np.arange(N)):
        raise InputError("idx_x and idx_y must partition the pooled index set")


def _moments(K: np.ndarray, mean_cols: np.ndarray, cov_cols: np.ndarray):
    G_mean = K[:, mean_cols]
    G_cov = K[:, cov_cols]
    m = G_mean.mean(axis=1)
    S = G_cov @ G_cov.T / cov_cols.size
    return m, S


def build_embedding(K, idx_x, idx_y) -> PooledEmbedding:
    """Build mean and second-moment coordinates for the given index partition.

    ``K`` is the symmetric pooled kernel matrix (or a :class:`KernelMatrix`
    wrapping it); ``idx_x`` and ``idx_y`` must partition its index set.
    """
    values = _pooled_matrix(K)
    ix = np.asarray(idx_x, dtype=np.intp)
    iy = np.asarray(idx_y, dtype=np.intp)
    _check_partition(values.shape[0], ix, iy)
    m_x, S_x = _moments(values, ix, ix)
    m_y, S_y = _moments(values, iy, iy)
    return PooledEmbedding(K=values, idx_x=ix, idx_y=iy, m_x=m_x, m_y=m_y,
                           S_x=S_x, S_y=S_y, n=ix.size, m=iy.size)


def build_split_embedding(K, idx_x, idx_y, s: int) -> PooledEmbedding:
    """Sample-splitting variant: the last ``s`` points of each sample estimate
    the second moments, the remaining leading points estimate the means.

    Requires ``1 <= s < min(n, m)``.
    """
    values = _pooled_matrix(K)
    ix = np.asarray(idx_x, dtype=np.intp)
    iy = np.asarray(idx_y, dtype=np.intp)
    _check_partition(values.shape[0], ix, iy)
    if not 1 <= s < min(ix.size, iy.size):
        raise InputError(f"split size must satisfy 1 <= s < min(n, m), got s={s}")
    m_x, S_x = _moments(values, ix[: ix.size - s], ix[ix.size - s:])
    m_y, S_y = _moments(values, iy[: iy.size - s], iy[iy.size - s:])
    return PooledEmbedding(K=values, idx_x=ix, idx_y=iy, m_x=m_x, m_y=m_y,
                           S_x=S_x, S_y=S_y, n=ix.size, m=iy.size, split=s)


def center(e: PooledEmbedding) -> CenteredEmbedding:
    """Centered covariances: sigma = S - m m^T per sample, pooled as their mean."""
    sigma_x = e.S_x - np.outer(e.m_x, e.m_x)
    sigma_y = e.S_y - np.outer(e.m_y, e.m_y)
    return CenteredEmbedding(sigma_x=sigma_x, sigma_y=sigma_y,
                             sigma_pooled=0.5 * (sigma_x + sigma_y))
