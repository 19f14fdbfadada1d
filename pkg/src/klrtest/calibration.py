"""Permutation calibration, Bonferroni grid aggregation, and analytic thresholds.

The permutation scheme draws B random partitions of the pooled sample with
replacement from the symmetric group.  Each draw comes from its own
counter-based substream keyed by (master seed, cell id, permutation index),
so results are bit-reproducible no matter how the work is scheduled across
threads.  P-values use the exact finite-B convention

    p = (1 + #{b : T_b >= T_obs}) / (B + 1)

which includes the observed statistic in the reference set and is valid at
any B.  A consequence worth knowing: the smallest achievable p-value is
1/(B+1), so a Bonferroni-corrected grid of k cells can only ever reject when
alpha / k >= 1/(B+1).  :func:`run_test` flags configurations that violate
this (e.g. the classical 7-ridge x 6-bandwidth grid at B=300 needs B >= 840).
"""

from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .embedding import build_embedding, center
from .errors import ConfigError, InputError
from .kernels import (BANDWIDTH_MULTIPLIERS, KernelSpec, bandwidth_grid,
                      kernel_matrix, median_heuristic)
from .statistics import (STATISTIC_KINDS, hsr_statistic, klr_statistic,
                         mmd_statistic, spectral_core, srmmd_statistic)

#: Ridge grid 10^-7 .. 10^-1, ascending.
DEFAULT_RIDGES = tuple(10.0 ** k for k in range(-7, 0))

_SPECTRAL_KINDS = ("KLR", "KLR0", "HSR")
_RIDGE_KINDS = ("KLR", "KLR0", "HSR", "SRMMD")

_MASK64 = (1 << 64) - 1
# arbitrary fixed second key word so the Philox key is never all-zero
_KEY_PAD = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class PermutationPlan:
    """Monte Carlo permutation budget, master seed, and level."""

    B: int
    master_seed: int
    alpha: float

    def __post_init__(self) -> None:
        if self.B < 1:
            raise ConfigError(f"permutation count must be >= 1, got {self.B}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")


class PermutationResult(NamedTuple):
    p_value: float
    quantile: float
    observed: float


def permutation_stream(master_seed: int, cell_id: int, perm_index: int) -> np.random.Generator:
    """Counter-based generator for one (cell, permutation) pair.

    Streams are disjoint by construction: the indices live in the high words
    of the Philox counter, far beyond any draw volume a single stream uses.
    """
    key = np.array([master_seed & _MASK64, _KEY_PAD], dtype=np.uint64)
    counter = np.array([0, 0, perm_index & _MASK64, cell_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def draw_partition(master_seed: int, cell_id: int, perm_index: int,
                   total: int, n_first: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniformly random partition of {0..total-1} into sizes (n_first, rest)."""
    perm = permutation_stream(master_seed, cell_id, perm_index).permutation(total)
    return perm[:n_first], perm[n_first:]


def pvalue_from_stats(observed: float, perm_stats: np.ndarray) -> float:
    """Exact permutation p-value including the observed statistic."""
    B = perm_stats.size
    return (1.0 + int(np.count_nonzero(perm_stats >= observed))) / (B + 1.0)


def permutation_quantile(observed: float, perm_stats: np.ndarray, alpha: float) -> float:
    """Order statistic of rank ceil((1-alpha)(B+1)) of the pooled B+1 values."""
    pooled = np.sort(np.append(perm_stats, observed))
    rank = math.ceil((1.0 - alpha) * pooled.size)
    rank = min(max(rank, 1), pooled.size)
    return float(pooled[rank - 1])


def permutation_pvalue(stat_fn: Callable, K, idx_x, idx_y,
                       plan: PermutationPlan, cell_id: int = 0) -> PermutationResult:
    """Calibrate ``stat_fn`` on the observed partition by random permutations.

    ``stat_fn(K, idx_x, idx_y)`` must be deterministic given a partition; the
    pooled kernel context ``K`` is computed once by the caller and reused for
    every permutation.
    """
    ix = np.asarray(idx_x, dtype=np.intp)
    iy = np.asarray(idx_y, dtype=np.intp)
    total = ix.size + iy.size
    if total < 2:
        raise InputError("need at least 2 pooled points to permute")
    observed = float(stat_fn(K, ix, iy))
    perm_stats = np.empty(plan.B)
    for b in range(plan.B):
        px, py = draw_partition(plan.master_seed, cell_id, b, total, ix.size)
        perm_stats[b] = stat_fn(K, px, py)
    return PermutationResult(
        p_value=pvalue_from_stats(observed, perm_stats),
        quantile=permutation_quantile(observed, perm_stats, plan.alpha),
        observed=observed,
    )


def aggregate_test(cells: Sequence[tuple], alpha: float, grid_sizes) -> bool:
    """Bonferroni aggregation: reject iff min p-value <= alpha / (number of cells).

    ``cells`` holds (bandwidth, ridge, p_value) triples; ``grid_sizes`` is
    either the cell count or a sequence of per-axis grid sizes whose product
    must match the cell count.
    """
    if not cells:
        raise ConfigError("empty grid")
    n_cells = int(np.prod(grid_sizes)) if np.iterable(grid_sizes) else int(grid_sizes)
    if n_cells != len(cells):
        raise ConfigError(f"grid sizes imply {n_cells} cells but {len(cells)} were given")
    min_p = min(float(c[-1]) for c in cells)
    return min_p <= alpha / n_cells


def analytic_threshold(alpha: float, n: int, beta: float, C: float, K_sup: float) -> float:
    """Distribution-free rejection threshold u_{alpha,n} for ridge schedules
    gamma_n >= C^2 n^{(beta-1)/4}:

        u = n^{-beta/2} * 6 K (4 K^{1/2} + K C sqrt(ln(1/alpha)))
    """
    if not 0.0 < alpha <= 1.0:
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    if not 0.0 < beta <= 1.0:
        raise InputError(f"beta must lie in (0, 1], got {beta}")
    if C <= 0 or K_sup <= 0:
        raise InputError("C and K_sup must be positive")
    return n ** (-beta / 2.0) * 6.0 * K_sup * (
        4.0 * math.sqrt(K_sup) + K_sup * C * math.sqrt(math.log(1.0 / alpha)))


def min_permutations(alpha_tilde: float, delta: float) -> int:
    """Smallest B with quantile error below alpha_tilde at confidence 1 - delta:
    ceil(ln(2/delta) / (2 alpha_tilde^2))."""
    if not 0.0 < alpha_tilde < 1.0:
        raise InputError(f"alpha_tilde must lie in (0, 1), got {alpha_tilde}")
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    return math.ceil(math.log(2.0 / delta) / (2.0 * alpha_tilde ** 2))


# ---------------------------------------------------------------------------
# Aggregated grid test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestConfig:
    """Configuration of one aggregated two-sample test run."""

    __test__ = False  # not a pytest class despite the name

    stats: tuple[str, ...] = ("KLR",)
    kernel_family: str = "gaussian"
    ridges: tuple[float, ...] = DEFAULT_RIDGES
    bandwidth_multipliers: tuple[float, ...] = BANDWIDTH_MULTIPLIERS
    permutations: int = 300
    alpha: float = 0.05
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.stats:
            raise ConfigError("at least one statistic kind is required")
        for kind in self.stats:
            if kind not in STATISTIC_KINDS:
                raise ConfigError(f"unknown statistic kind {kind!r}; expected one of {STATISTIC_KINDS}")
        if len(set(self.stats)) != len(self.stats):
            raise ConfigError("duplicate statistic kinds")
        if self.kernel_family not in ("gaussian", "laplacian"):
            raise ConfigError(f"unknown kernel family {self.kernel_family!r}")
        if any(r <= 0 for r in self.ridges):
            raise ConfigError("all ridge values must be positive")
        if any(c <= 0 for c in self.bandwidth_multipliers):
            raise ConfigError("all bandwidth multipliers must be positive")
        if not self.ridges and any(k in _RIDGE_KINDS for k in self.stats):
            raise ConfigError("ridge grid must be nonempty for regularized statistics")
        if not self.bandwidth_multipliers:
            raise ConfigError("bandwidth multiplier grid must be nonempty")
        if self.permutations < 1:
            raise ConfigError(f"permutation count must be >= 1, got {self.permutations}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.threads < 1:
            raise ConfigError(f"thread count must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class CellResult:
    """One (bandwidth, ridge) calibration cell; ridge is None for MMD."""

    bandwidth: float
    ridge: float | None
    observed: float
    quantile: float
    p_value: float


@dataclass
class StatisticReport:
    """Grid results and aggregate decision for one statistic kind."""

    kind: str
    cells: list[CellResult]
    corrected_level: float
    min_achievable_p: float
    degenerate: bool
    reject: bool


@dataclass
class TestReport:
    """Full outcome of an aggregated test run.

    ``wall_time_s`` is informational only and deliberately excluded from the
    serialized form, which is byte-identical for identical (config, seed)
    regardless of thread count.
    """

    __test__ = False  # not a pytest class despite the name

    n: int
    m: int
    dim: int
    kernel_family: str
    alpha: float
    permutations: int
    seed: int
    stats: tuple[str, ...]
    h_median: float
    h_median_degenerate: bool
    bandwidths: list[float]
    ridges: list[float]
    per_statistic: dict[str, StatisticReport]
    reject_any: bool
    permutation_streams: str = "independent-per-cell"
    wall_time_s: float | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "config": {
                "n": self.n,
                "m": self.m,
                "dim": self.dim,
                "kernel_family": self.kernel_family,
                "alpha": self.alpha,
                "permutations": self.permutations,
                "seed": self.seed,
                "stats": list(self.stats),
                "h_median": self.h_median,
                "h_median_degenerate": self.h_median_degenerate,
                "bandwidths": list(self.bandwidths),
                "ridges": list(self.ridges),
                "permutation_streams": self.permutation_streams,
            },
            "statistics": {
                kind: {
                    "corrected_level": rep.corrected_level,
                    "min_achievable_p": rep.min_achievable_p,
                    "degenerate": rep.degenerate,
                    "reject": rep.reject,
                    "cells": [
                        {
                            "bandwidth": c.bandwidth,
                            "ridge": c.ridge,
                            "observed": c.observed,
                            "quantile": c.quantile,
                            "p_value": c.p_value,
                        }
                        for c in rep.cells
                    ],
                }
                for kind, rep in self.per_statistic.items()
            },
            "reject_any": self.reject_any,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def evaluate_partition(K: np.ndarray, idx_x, idx_y, gamma: float | None,
                       kinds: Sequence[str]) -> dict[str, float]:
    """All requested statistics for one partition of the pooled kernel matrix.

    Statistics sharing the spectral core (KLR, KLR0, HSR) are computed from a
    single factorization.  ``gamma`` may be None only when ``kinds`` is
    MMD-only.
    """
    out: dict[str, float] = {}
    spectral = [k for k in kinds if k in _SPECTRAL_KINDS]
    if spectral or "SRMMD" in kinds:
        if gamma is None:
            raise ConfigError("ridge-regularized statistics need a gamma value")
        e = build_embedding(K, idx_x, idx_y)
        if spectral:
            core = spectral_core(e, gamma, method="solve")
            for kind in spectral:
                out[kind] = hsr_statistic(core) if kind == "HSR" else klr_statistic(core, kind)
        if "SRMMD" in kinds:
            out["SRMMD"] = srmmd_statistic(e, center(e), gamma)
    if "MMD" in kinds:
        out["MMD"] = mmd_statistic(K, idx_x, idx_y)
    return out


def _run_cell(K: np.ndarray, n: int, m: int, gamma: float | None, kinds: tuple[str, ...],
              plan: PermutationPlan, cell_id: int) -> dict[str, tuple[float, float, float]]:
    """Observed value, permutation quantile, and p-value for each kind in one cell."""
    N = n + m
    ix0 = np.arange(n)
    iy0 = np.arange(n, N)
    observed = evaluate_partition(K, ix0, iy0, gamma, kinds)
    perm_stats = {k: np.empty(plan.B) for k in kinds}
    for b in range(plan.B):
        px, py = draw_partition(plan.master_seed, cell_id, b, N, n)
        values = evaluate_partition(K, px, py, gamma, kinds)
        for k in kinds:
            perm_stats[k][b] = values[k]
    return {
        k: (observed[k],
            permutation_quantile(observed[k], perm_stats[k], plan.alpha),
            pvalue_from_stats(observed[k], perm_stats[k]))
        for k in kinds
    }


def run_test(x, y, config: TestConfig) -> TestReport:
    """Aggregated permutation test of sample x against sample y.

    Builds one pooled kernel matrix per bandwidth (shared across every
    permutation and ridge of that bandwidth), calibrates each (bandwidth,
    ridge) cell with its own permutation substream, and Bonferroni-aggregates
    each statistic kind over its grid.
    """
    t0 = time.perf_counter()
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] == 0 or Y.shape[0] == 0:
        raise InputError("both samples must be nonempty n x d matrices")
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"samples have different column counts: {X.shape[1]} vs {Y.shape[1]}")

    n, m = X.shape[0], Y.shape[0]
    pooled = np.vstack([X, Y])
    med = median_heuristic(pooled)
    bandwidths = bandwidth_grid(med.bandwidth, config.bandwidth_multipliers)
    ridges = sorted(config.ridges)

    ridge_kinds = tuple(k for k in config.stats if k in _RIDGE_KINDS)
    has_mmd = "MMD" in config.stats
    n_bw = len(bandwidths)
    n_ridge = len(ridges)

    # cell ids: ridge cells first (bandwidth-major), then one MMD cell per bandwidth
    tasks = []  # (cell_id, bandwidth_index, gamma_or_None, kinds)
    if ridge_kinds:
        for i_h in range(n_bw):
            for j_g in range(n_ridge):
                tasks.append((i_h * n_ridge + j_g, i_h, ridges[j_g], ridge_kinds))
    if has_mmd:
        for i_h in range(n_bw):
            tasks.append((n_bw * n_ridge + i_h, i_h, None, ("MMD",)))

    corrected = {k: config.alpha / (n_bw * n_ridge) for k in ridge_kinds}
    if has_mmd:
        corrected["MMD"] = config.alpha / n_bw
    min_p = 1.0 / (config.permutations + 1)
    for kind, level in corrected.items():
        if level < min_p:
            warnings.warn(
                f"{kind}: corrected level {level:.3g} is below the smallest achievable "
                f"p-value {min_p:.3g} (B={config.permutations}); the aggregated test "
                f"cannot reject. Increase B or shrink the grid.", stacklevel=2)

    kernels = [kernel_matrix(KernelSpec(config.kernel_family, h), pooled).values
               for h in bandwidths]

    def eval_task(task):
        cell_id, i_h, gamma, kinds = task
        plan = PermutationPlan(B=config.permutations, master_seed=config.seed,
                               alpha=corrected[kinds[0]])
        return _run_cell(kernels[i_h], n, m, gamma, kinds, plan, cell_id)

    # Pin BLAS pools to one thread: the permutation loop alternates between
    # numpy's and scipy's bundled BLAS runtimes, whose spin-waiting worker
    # threads otherwise thrash each other; matrices here are far too small to
    # gain from threaded kernels, and concurrency lives at the cell level.
    with threadpool_limits(limits=1, user_api="blas"):
        if config.threads > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                results = list(pool.map(eval_task, tasks))
        else:
            results = [eval_task(t) for t in tasks]

    per_stat: dict[str, StatisticReport] = {}
    for kind in config.stats:
        cells = []
        for (cell_id, i_h, gamma, kinds), res in zip(tasks, results):
            if kind not in kinds:
                continue
            obs, quant, p = res[kind]
            cells.append(CellResult(bandwidth=bandwidths[i_h], ridge=gamma,
                                    observed=obs, quantile=quant, p_value=p))
        reject = aggregate_test([(c.bandwidth, c.ridge, c.p_value) for c in cells],
                                config.alpha, len(cells))
        per_stat[kind] = StatisticReport(
            kind=kind, cells=cells, corrected_level=corrected[kind],
            min_achievable_p=min_p, degenerate=corrected[kind] < min_p, reject=reject)

    return TestReport(
        n=n, m=m, dim=X.shape[1], kernel_family=config.kernel_family,
        alpha=config.alpha, permutations=config.permutations, seed=config.seed,
        stats=config.stats, h_median=med.bandwidth, h_median_degenerate=med.degenerate,
        bandwidths=list(bandwidths), ridges=list(ridges), per_statistic=per_stat,
        reject_any=any(r.reject for r in per_stat.values()),
        wall_time_s=time.perf_counter() - t0)
