"""Multi-layer false discovery rate control with the p-filter."""

from .combine import (
    Bonferroni, External, Fisher, ReshapedWeightedSimes, Ruger, Ruschendorf, Simes,
    Stouffer, WeightedSimes, group_pvalues,
)
from .engine import (
    EngineOptions, check_ic, fdp_layer, is_feasible, oracle_max_corner, pfilter,
    power_layer, rejected_masses,
)
from .model import (
    Dotfraction, Layer, Problem, RejectionResult, ValidationError, coarsest_layer,
    dotfrac, finest_layer, validate,
)
from .reshape import BY, DiscreteMeasure, Identity

__all__ = [
    "Bonferroni", "External", "Fisher", "ReshapedWeightedSimes", "Ruger", "Ruschendorf",
    "Simes", "Stouffer", "WeightedSimes", "group_pvalues",
    "EngineOptions", "check_ic", "fdp_layer", "is_feasible", "oracle_max_corner", "pfilter",
    "power_layer", "rejected_masses",
    "Dotfraction", "Layer", "Problem", "RejectionResult", "ValidationError", "coarsest_layer",
    "dotfrac", "finest_layer", "validate",
    "BY", "DiscreteMeasure", "Identity",
]
