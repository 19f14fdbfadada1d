"""Kernel likelihood-ratio two-sample testing.

Regularized relative-entropy statistics between Gaussian embeddings of two
samples in a reproducing-kernel Hilbert space, plus baseline discrepancies,
permutation calibration with Bonferroni grid aggregation, synthetic
benchmark models, and closed-form rate oracles.
"""

from .brownian import BMConfig, bm_hs_sq, bm_rate_approx, fit_rate_slope
from .calibration import (DEFAULT_RIDGES, PermutationPlan, TestConfig, TestReport,
                          aggregate_test, analytic_threshold, min_permutations,
                          permutation_pvalue, run_test)
from .embedding import (CenteredEmbedding, PooledEmbedding, build_embedding,
                        build_split_embedding, center)
from .errors import ConfigError, InputError, NumericalError
from .kernels import (BANDWIDTH_MULTIPLIERS, KernelMatrix, KernelSpec,
                      bandwidth_grid, eval_kernel, kernel_matrix, median_heuristic)
from .statistics import (STATISTIC_KINDS, SpectralCore, hs_discrepancy,
                         hsr_statistic, klr_statistic, mmd_statistic,
                         spectral_core, srmmd_statistic)
from .synthetic import ModelSpec, paper_scenario, sample

__version__ = "0.1.0"

__all__ = [
    "BANDWIDTH_MULTIPLIERS", "BMConfig", "CenteredEmbedding", "ConfigError",
    "DEFAULT_RIDGES", "InputError", "KernelMatrix", "KernelSpec", "ModelSpec",
    "NumericalError", "PermutationPlan", "PooledEmbedding", "STATISTIC_KINDS",
    "SpectralCore", "TestConfig", "TestReport", "aggregate_test",
    "analytic_threshold", "bandwidth_grid", "bm_hs_sq", "bm_rate_approx",
    "build_embedding", "build_split_embedding", "center", "eval_kernel",
    "fit_rate_slope", "hs_discrepancy", "hsr_statistic", "kernel_matrix",
    "klr_statistic", "median_heuristic", "min_permutations", "mmd_statistic",
    "paper_scenario", "permutation_pvalue", "run_test", "sample",
    "spectral_core", "srmmd_statistic",
]
