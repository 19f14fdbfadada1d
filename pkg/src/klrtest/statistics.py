"""Two-sample test statistics computed on a pooled embedding.

All regularized statistics share one spectral core: with ridge gamma > 0 and
the whitening base taken from the first sample,

    A = (S_x + gamma I)^{-1/2} (S_y + gamma I) (S_x + gamma I)^{-1/2}

whose eigenvalues a_i > 0 drive the spectral terms.  The statistic family:

* ``KLR``   = ||A^{-1/2}-whitened mean difference||^2 + sum_i (a_i - ln a_i - 1)
* ``KLR0``  = sum_i (a_i - ln a_i - 1)   (central Gaussian embeddings)
* ``HSR``   = sqrt(sum_i (a_i - 1)^2)    (regularized HS discrepancy)
* ``MMD``   = squared mean-embedding distance (biased V-statistic)
* ``SRMMD`` = mean difference whitened by the ridge-regularized pooled
  centered covariance.

The statistic is deliberately asymmetric in the two samples (the first
sample is the whitening base); no symmetrization is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .embedding import CenteredEmbedding, PooledEmbedding
from .errors import InputError, NumericalError

STATISTIC_KINDS = ("KLR", "KLR0", "HSR", "MMD", "SRMMD")

#: floor applied to eigenvalues of A after symmetrization
EIGVAL_FLOOR = 1e-12
#: eigenvalues of A below this signal corrupt inputs rather than roundoff
EIGVAL_FAILURE = -1e-6


@dataclass(frozen=True)
class SpectralCore:
    """Eigenvalues of the whitened second-moment ratio plus the whitened mean difference.

    ``whitened_mean_diff`` holds (S_x + gamma I)^{-1/2} (m_y - m_x) for the
    eigendecomposition route; the factor-and-solve route stores the
    triangular-solve image, which has the same norm (the only quantity the
    statistics consume).
    """

    eigvals: np.ndarray
    whitened_mean_diff: np.ndarray
    gamma: float


def spectral_core(e: PooledEmbedding, gamma: float, method: str = "eigh") -> SpectralCore:
    """Spectral core of the regularized statistics at ridge ``gamma``.

    ``method="eigh"`` is the reference route: eigendecompose S_x (eigenvalues
    clamped below at 0), form A explicitly, symmetrize it as (A + A^T)/2 and
    eigendecompose.  ``method="solve"`` is the factor-and-solve route using a
    Cholesky factor of S_x + gamma I and a generalized symmetric-definite
    eigensolver; both routes agree to roundoff and are cross-checked in the
    test suite.
    """
    if not gamma > 0:
        raise InputError(f"gamma must be positive, got {gamma}")
    delta = e.m_y - e.m_x
    N = e.S_x.shape[0]
    if method == "eigh":
        base_vals, U = np.linalg.eigh(e.S_x)
        inv_sqrt = 1.0 / np.sqrt(np.clip(base_vals, 0.0, None) + gamma)
        W = (U * inv_sqrt) @ U.T
        S_y_g = e.S_y + gamma * np.eye(N)
        A = W @ S_y_g @ W
        raw = np.linalg.eigvalsh(0.5 * (A + A.T))
        wmd = W @ delta
    elif method == "solve":
        S_x_g = e.S_x + gamma * np.eye(N)
        S_y_g = e.S_y + gamma * np.eye(N)
        try:
            L = sla.cholesky(S_x_g, lower=True)
            raw = sla.eigh(S_y_g, S_x_g, eigvals_only=True, driver="gvd")
        except (sla.LinAlgError, np.linalg.LinAlgError) as exc:
            raise NumericalError(f"factorization failed at gamma={gamma:g}: {exc}") from exc
        wmd = sla.solve_triangular(L, delta, lower=True)
    else:
        raise InputError(f"unknown spectral-core method {method!r}")
    low = float(raw.min())
    if low < EIGVAL_FAILURE:
        raise NumericalError(
            f"whitened ratio matrix has eigenvalue {low:.3e} < {EIGVAL_FAILURE:g} "
            f"at gamma={gamma:g}; inputs look corrupt")
    return SpectralCore(eigvals=np.clip(raw, EIGVAL_FLOOR, None),
                        whitened_mean_diff=wmd, gamma=gamma)


def _spectral_term(eigvals: np.ndarray) -> float:
    # sum_i (a_i - ln a_i - 1) >= 0, evaluated as x - log1p(x) with x = a - 1
    # for accuracy near a = 1; each term is clamped at 0 against cancellation.
    x = eigvals - 1.0
    return float(np.sum(np.maximum(x - np.log1p(x), 0.0)))


def klr_statistic(core: SpectralCore, variant: str = "KLR") -> float:
    """Regularized likelihood-ratio statistic from a spectral core.

    ``KLR`` adds the whitened-mean (Mahalanobis) term to the spectral
    log-determinant term; ``KLR0`` keeps the spectral term alone.
    """
    if variant not in ("KLR", "KLR0"):
        raise InputError(f"variant must be 'KLR' or 'KLR0', got {variant!r}")
    term2 = _spectral_term(core.eigvals)
    if variant == "KLR0":
        return term2
    wmd = core.whitened_mean_diff
    return float(wmd.dot(wmd)) + term2


def hsr_statistic(core: SpectralCore) -> float:
    """Ridge-whitened Hilbert-Schmidt discrepancy sqrt(sum (a_i - 1)^2)."""
    return float(np.sqrt(np.sum((core.eigvals - 1.0) ** 2)))


def mmd_statistic(K, idx_x, idx_y) -> float:
    """Biased (V-statistic) squared mean-embedding distance from pooled kernel blocks."""
    values = np.asarray(K.values if hasattr(K, "values") else K, dtype=float)
    ix = np.asarray(idx_x, dtype=np.intp)
    iy = np.asarray(idx_y, dtype=np.intp)
    if ix.size == 0 or iy.size == 0:
        raise InputError("both samples must be nonempty")
    xx = values[np.ix_(ix, ix)].mean()
    yy = values[np.ix_(iy, iy)].mean()
    xy = values[np.ix_(ix, iy)].mean()
    return max(float(xx + yy - 2.0 * xy), 0.0)


def srmmd_statistic(e: PooledEmbedding, c: CenteredEmbedding, gamma: float) -> float:
    """Spectrally regularized MMD: mean difference whitened by the pooled
    centered covariance plus ridge, via a symmetric positive-definite solve."""
    if not gamma > 0:
        raise InputError(f"gamma must be positive, got {gamma}")
    delta = e.m_x - e.m_y
    M = c.sigma_pooled + gamma * np.eye(c.sigma_pooled.shape[0])
    try:
        factor = sla.cho_factor(0.5 * (M + M.T), lower=True)
    except (sla.LinAlgError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"pooled covariance solve failed at gamma={gamma:g}: {exc}") from exc
    return max(float(delta.dot(sla.cho_solve(factor, delta))), 0.0)


def hs_discrepancy(K, idx_x, idx_y) -> float:
    """Squared Hilbert-Schmidt distance between the empirical second-moment
    embeddings, via double sums of the squared kernel over both samples."""
    values = np.asarray(K.values if hasattr(K, "values") else K, dtype=float)
    ix = np.asarray(idx_x, dtype=np.intp)
    iy = np.asarray(idx_y, dtype=np.intp)
    if ix.size == 0 or iy.size == 0:
        raise InputError("both samples must be nonempty")
    sq = values ** 2
    xx = sq[np.ix_(ix, ix)].sum() / (ix.size * ix.size)
    yy = sq[np.ix_(iy, iy)].sum() / (iy.size * iy.size)
    xy = sq[np.ix_(ix, iy)].sum() / (ix.size * iy.size)
    return max(float(xx + yy - 2.0 * xy), 0.0)
