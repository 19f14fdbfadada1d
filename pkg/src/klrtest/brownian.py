"""Closed-form divergence rates for scaled Brownian-motion covariances.

The covariance operator of Brownian motion on [0, 1] with variance scale v
has eigenvalues v * lambda_n with lambda_n = ((n - 1/2) pi)^(-2).  For two
scales v1, v2 the ridge-regularized discrepancy rate series is

    hs_sq(gamma) = (v2 - v1)^2 * sum_n lambda_n / (v1 lambda_n + gamma)^2,

i.e. (v2 - v1)^2 trace((C_{v1} + gamma I)^{-2} C_1) with C_1 the unit-scale
covariance.  The series is finite for every gamma > 0, strictly decreasing
in gamma, and blows up like

    (v2 - v1)^2 / (4 gamma^{3/2} sqrt(v1))

as the ridge vanishes.  These two quantities serve as analytic oracles for
the divergence-rate checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

#: default series truncation; the tail beyond N is bounded by the integral
#: comparison sum_{n>N} < 1/(gamma^2 pi^2 N), i.e. a relative truncation
#: error of about 4/(pi^2 sqrt(gamma) N) -- roughly 4e-6 at gamma = 1e-4.
DEFAULT_TERMS = 10_000_000

_CHUNK = 1_000_000


@dataclass(frozen=True)
class BMConfig:
    """Variance scales, ridge, and truncation length of the rate series."""

    v1: float
    v2: float
    gamma: float
    n_terms: int = DEFAULT_TERMS

    def __post_init__(self) -> None:
        if self.v1 <= 0 or self.v2 <= 0:
            raise InputError("variance scales must be positive")
        if self.gamma <= 0:
            raise InputError(f"gamma must be positive, got {self.gamma}")
        if self.n_terms < 1:
            raise InputError(f"n_terms must be >= 1, got {self.n_terms}")


def bm_hs_sq(cfg: BMConfig) -> float:
    """Truncated value of the rate series.

    With w_n = (n - 1/2) pi each term equals w_n^2 / (v1 + gamma w_n^2)^2,
    an overflow-free rewriting of lambda_n / (v1 lambda_n + gamma)^2.
    Summation is chunked with a fixed chunk size and accumulated in order,
    making the result independent of the environment's thread count.
    """
    if cfg.v1 == cfg.v2:
        return 0.0
    total = 0.0
    for start in range(1, cfg.n_terms + 1, _CHUNK):
        stop = min(start + _CHUNK, cfg.n_terms + 1)
        idx = np.arange(start, stop, dtype=float)
        w2 = ((idx - 0.5) * np.pi) ** 2
        total += float(np.sum(w2 / (cfg.v1 + cfg.gamma * w2) ** 2))
    return (cfg.v2 - cfg.v1) ** 2 * total


def bm_rate_approx(v1: float, v2: float, gamma: float) -> float:
    """Small-ridge limit (v2 - v1)^2 / (4 gamma^{3/2} sqrt(v1)) of the series."""
    if v1 <= 0 or v2 <= 0 or gamma <= 0:
        raise InputError("v1, v2, and gamma must all be positive")
    return (v2 - v1) ** 2 / (4.0 * gamma ** 1.5 * np.sqrt(v1))


def fit_rate_slope(v1: float, v2: float, gammas, n_terms: int = DEFAULT_TERMS) -> float:
    """Least-squares slope of log hs_sq against log gamma over a ridge list."""
    gs = [float(g) for g in gammas]
    if len(gs) < 2:
        raise InputError("need at least two gamma values to fit a slope")
    values = [bm_hs_sq(BMConfig(v1=v1, v2=v2, gamma=g, n_terms=n_terms)) for g in gs]
    if any(v <= 0 for v in values):
        raise InputError("series values must be positive to fit a log-log slope")
    slope = np.polyfit(np.log(gs), np.log(values), 1)[0]
    return float(slope)
