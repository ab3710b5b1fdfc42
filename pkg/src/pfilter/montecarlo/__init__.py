"""Simulation, FDR estimation and stochastic lemma checks."""

from .data import (
    Dependence, DuplicateBlocks, GaussianEquicorrelated, Independent, SimModel,
    gen_matrix, gen_pvalues, replication_rng,
)
from .fdr import MIN_REPS, SimReport, UndefinedFDP, estimate_fdr, simulate_fdp
from .lemmas import (
    BHCount, BHThreshold, CheckResult, Constant, check_group_superuniformity,
    check_inverse_binomial, check_simes_distribution, check_superuniformity,
    inverse_binomial_exact, run_suite,
)

__all__ = [
    "Dependence", "DuplicateBlocks", "GaussianEquicorrelated", "Independent", "SimModel",
    "gen_matrix", "gen_pvalues", "replication_rng",
    "MIN_REPS", "SimReport", "UndefinedFDP", "estimate_fdr", "simulate_fdp",
    "BHCount", "BHThreshold", "CheckResult", "Constant", "check_group_superuniformity",
    "check_inverse_binomial", "check_simes_distribution", "check_superuniformity",
    "inverse_binomial_exact", "run_suite",
]
