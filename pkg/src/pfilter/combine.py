"""Group p-values from the base p-values of each group's members.

The Simes family (plain, prior-weighted, reshaped) is valid under
independence or positive dependence (reshaped: arbitrary dependence);
Fisher and Stouffer assume independence within the group; Bonferroni,
Ruschendorf and Ruger are valid under arbitrary dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np
from scipy import special

from .reshape import BY, Identity, ReshapeSpec, reshape_eval

if TYPE_CHECKING:
    from .model import Problem


class CombinerError(ValueError):
    pass


@dataclass(frozen=True)
class Simes:
    pass


@dataclass(frozen=True)
class WeightedSimes:
    """Prior-weighted Simes; ``within_weights`` holds one weight vector per group.

    ``None`` uses the default within-group weights (see :func:`group_pvalues`).
    """

    within_weights: Optional[tuple[tuple[float, ...], ...]] = None


@dataclass(frozen=True)
class ReshapedWeightedSimes:
    """Weighted Simes with a within-group reshaping function.

    ``within_reshape=None`` means BY reshaping sized to each group.
    """

    within_weights: Optional[tuple[tuple[float, ...], ...]] = None
    within_reshape: Optional[ReshapeSpec] = None


@dataclass(frozen=True)
class Fisher:
    pass


@dataclass(frozen=True)
class Stouffer:
    pass


@dataclass(frozen=True)
class Bonferroni:
    pass


@dataclass(frozen=True)
class Ruschendorf:
    pass


@dataclass(frozen=True)
class Ruger:
    k: int


@dataclass(frozen=True)
class External:
    values: tuple[float, ...]


CombinerSpec = Union[
    Simes, WeightedSimes, ReshapedWeightedSimes, Fisher, Stouffer,
    Bonferroni, Ruschendorf, Ruger, External,
]

SIMES_FAMILY = (Simes, WeightedSimes, ReshapedWeightedSimes)


def _as_pvalues(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        raise CombinerError("cannot combine an empty set of p-values")
    if not (p.min() >= 0 and p.max() <= 1):  # also rejects NaN
        raise CombinerError("p-values must lie in [0, 1]")
    return p


def _clamp(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def simes(p) -> float:
    """Simes p-value ``min_k P_(k) m / k``."""
    p = np.sort(_as_pvalues(p))
    m = p.size
    return _clamp(np.min(p * m / np.arange(1, m + 1)))


def weighted_simes(p, w) -> float:
    """Weighted Simes p-value with ``Q_i = P_i / w_i``.

    The weights are used as given; callers wanting the usual calibration
    should pass weights summing to ``len(p)``.
    """
    p = _as_pvalues(p)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape != p.shape:
        raise CombinerError(f"got {p.size} p-values but {w.size} weights")
    if np.any(~(w > 0)):
        raise CombinerError("within-group weights must be positive")
    q = np.sort(p / w)
    m = q.size
    return _clamp(np.min(q * m / np.arange(1, m + 1)))


def reshaped_weighted_simes(p, w, spec: ReshapeSpec) -> float:
    """``min_k Q_(k) m / beta(k)`` over the ``k`` with ``beta(k) > 0``."""
    p = _as_pvalues(p)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape != p.shape:
        raise CombinerError(f"got {p.size} p-values but {w.size} weights")
    if np.any(~(w > 0)):
        raise CombinerError("within-group weights must be positive")
    m = p.size
    if isinstance(spec, Identity):
        return weighted_simes(p, w)
    beta = np.array([reshape_eval(spec, k) for k in range(1, m + 1)])
    live = beta > 0
    if not live.any():
        raise CombinerError(f"reshaping {spec} vanishes on 1..{m}; Simes value undefined")
    q = np.sort(p / w)
    return _clamp(np.min(q[live] * m / beta[live]))


def fisher(p) -> float:
    """Fisher's combination: chi-squared(2m) upper tail at ``-2 sum log P_i``.

    A zero p-value saturates the statistic and gives 0.
    """
    p = _as_pvalues(p)
    if np.any(p == 0):
        return 0.0
    stat = -2.0 * math.fsum(np.log(p))
    # chi2(2m) survival at x equals the regularized upper gamma Q(m, x/2)
    return _clamp(special.gammaincc(p.size, stat / 2.0))


def stouffer(p) -> float:
    """Stouffer's combination ``Phi(sum_i Phi^{-1}(P_i) / sqrt(m))``.

    Zeros saturate to 0 (taking precedence over ones), ones to 1.
    """
    p = _as_pvalues(p)
    if np.any(p == 0):
        return 0.0
    if np.any(p == 1):
        return 1.0
    z = math.fsum(special.ndtri(p)) / math.sqrt(p.size)
    return _clamp(special.ndtr(z))


def bonferroni(p) -> float:
    p = _as_pvalues(p)
    return _clamp(p.size * p.min())


def ruschendorf(p) -> float:
    p = _as_pvalues(p)
    return _clamp(2.0 * math.fsum(p) / p.size)


def ruger(p, k: int) -> float:
    p = np.sort(_as_pvalues(p))
    m = p.size
    if int(k) != k or not 1 <= k <= m:
        raise CombinerError(f"Ruger order k={k} must lie in 1..{m}")
    k = int(k)
    return _clamp(p[k - 1] * m / k)


def _normalized(w: np.ndarray) -> np.ndarray:
    # rescale so the weights sum to the group size (a singleton gets exactly 1)
    return w / w.sum() * w.size


def default_within_weights(problem: "Problem", members: Sequence[int]) -> np.ndarray:
    """Per-hypothesis prior weights implied by the problem for a group.

    If some layer is the finest partition (every group a singleton, every
    index covered once), its prior weights are used; otherwise unit weights.
    The result is rescaled to sum to the group size.
    """
    per_hyp = problem.hypothesis_prior_weights
    w = np.ones(len(members)) if per_hyp is None else per_hyp[list(members)]
    return _normalized(np.asarray(w, dtype=float))


def _within_weights(spec, problem, g, members) -> np.ndarray:
    if spec.within_weights is None:
        return default_within_weights(problem, members)
    w = np.asarray(spec.within_weights[g], dtype=float)
    if w.size != len(members):
        raise CombinerError(f"group {g}: {len(members)} members but {w.size} within-group weights")
    return w


def combine_group(spec: CombinerSpec, p_members, *, problem=None, g: int = 0, members=()) -> float:
    """Apply one combiner to the p-values of a single group."""
    if isinstance(spec, Simes):
        return simes(p_members)
    if isinstance(spec, WeightedSimes):
        return weighted_simes(p_members, _within_weights(spec, problem, g, members))
    if isinstance(spec, ReshapedWeightedSimes):
        reshape = spec.within_reshape if spec.within_reshape is not None else BY(len(p_members))
        return reshaped_weighted_simes(p_members, _within_weights(spec, problem, g, members), reshape)
    if isinstance(spec, Fisher):
        return fisher(p_members)
    if isinstance(spec, Stouffer):
        return stouffer(p_members)
    if isinstance(spec, Bonferroni):
        return bonferroni(p_members)
    if isinstance(spec, Ruschendorf):
        return ruschendorf(p_members)
    if isinstance(spec, Ruger):
        return ruger(p_members, spec.k)
    if isinstance(spec, External):
        return float(spec.values[g])
    raise TypeError(f"unknown combiner {spec!r}")


def group_pvalues(problem: "Problem", layer_index: int) -> np.ndarray:
    """Group p-values ``P^(m)_g`` of one layer, in group order."""
    layer = problem.layers[layer_index]
    spec = layer.combiner
    if isinstance(spec, External):
        if len(spec.values) != layer.n_groups:
            raise CombinerError(
                f"layer {layer_index}: {len(spec.values)} external p-values for {layer.n_groups} groups"
            )
        return np.asarray(spec.values, dtype=float)
    p = problem.p
    if isinstance(spec, (Simes, Bonferroni)) and all(len(g) == 1 for g in layer.groups):
        # a single p-value is its own Simes and Bonferroni value
        return p[[g[0] for g in layer.groups]].copy()
    out = np.empty(layer.n_groups)
    for g, members in enumerate(layer.groups):
        out[g] = combine_group(spec, p[list(members)], problem=problem, g=g, members=members)
    return out
