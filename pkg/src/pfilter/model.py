"""Domain types shared by the rest of the package.

Hypotheses are indexed ``0..n-1`` everywhere.  A :class:`Layer` is one
(possibly incomplete, possibly overlapping) partition of the hypotheses
into groups, with its own prior weights ``w``, penalty weights ``u``,
target level, adaptivity, reshaping and group combiner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from numbers import Real
from typing import Any, Optional, Sequence

import numpy as np

from .combine import (
    CombinerSpec, External, ReshapedWeightedSimes, Ruger, Simes, WeightedSimes,
)
from .reshape import BY, Identity, ReshapeSpec

NORMALIZATION_RTOL = 1e-9
DEPENDENCE_LABELS = ("independent", "prds", "arbitrary")
IC_MODES = ("weak", "strong")

KVector = np.ndarray


# --------------------------------------------------------------------------
# dotfractions


class UndefinedDotfraction(ArithmeticError):
    """Raised when the numeric value of an undefined dotfraction is requested."""


@dataclass(frozen=True)
class Dotfraction:
    """Three-valued ratio: ``0`` if the numerator is 0, ``a/b`` if both are
    nonzero, undefined if only the denominator is 0.

    Build instances with :func:`dotfrac`.  Arithmetic works on any numeric
    type (``float`` or ``fractions.Fraction``); an undefined operand makes
    the result undefined.
    """

    kind: str
    value: Any = 0

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    @property
    def is_undefined(self) -> bool:
        return self.kind == "undefined"

    @property
    def numeric(self):
        if self.is_undefined:
            raise UndefinedDotfraction("dotfraction a/0 with a != 0 has no value")
        return self.value

    def __float__(self) -> float:
        return float(self.numeric)

    def __add__(self, other):
        if not isinstance(other, Dotfraction):
            return NotImplemented
        if self.is_undefined or other.is_undefined:
            return _UNDEFINED
        return _from_value(self.value + other.value)

    def __mul__(self, other):
        if isinstance(other, Dotfraction):
            if self.is_undefined or other.is_undefined:
                return _UNDEFINED
            return _from_value(self.value * other.value)
        if isinstance(other, Real):
            if self.is_undefined:
                return _UNDEFINED
            return _from_value(self.value * other)
        return NotImplemented

    __rmul__ = __mul__

    def _cmp_value(self, other):
        return other.numeric if isinstance(other, Dotfraction) else other

    def __lt__(self, other):
        return self.numeric < self._cmp_value(other)

    def __le__(self, other):
        return self.numeric <= self._cmp_value(other)

    def __gt__(self, other):
        return self.numeric > self._cmp_value(other)

    def __ge__(self, other):
        return self.numeric >= self._cmp_value(other)

    def __repr__(self) -> str:
        if self.kind == "value":
            return f"Dotfraction({self.value!r})"
        return f"Dotfraction.{self.kind}"


_ZERO = Dotfraction("zero", 0)
_UNDEFINED = Dotfraction("undefined", None)


def _from_value(v) -> Dotfraction:
    return _ZERO if v == 0 else Dotfraction("value", v)


def dotfrac(a, b) -> Dotfraction:
    """``a / b`` with the conventions ``0/b = 0`` (any ``b``) and ``a/0`` undefined."""
    if a < 0 or b < 0:
        raise ValueError(f"dotfractions take nonnegative arguments, got ({a}, {b})")
    if a == 0:
        return _ZERO
    if b == 0:
        return _UNDEFINED
    return Dotfraction("value", a / b)


# --------------------------------------------------------------------------
# layers and problems


def _index_tuple(group) -> tuple[int, ...]:
    out = []
    for i in group:
        if isinstance(i, bool) or int(i) != i:
            raise TypeError(f"group members must be integers, got {i!r}")
        out.append(int(i))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class Layer:
    """One partition of the hypotheses into groups.

    ``w`` and ``u`` default to ones.  ``lam`` defaults to 0.5 when
    ``adaptive`` is set and to 1 otherwise.
    """

    groups: tuple[tuple[int, ...], ...]
    alpha: float
    w: Optional[tuple[float, ...]] = None
    u: Optional[tuple[float, ...]] = None
    lam: Optional[float] = None
    adaptive: bool = False
    reshape: ReshapeSpec = field(default_factory=Identity)
    combiner: CombinerSpec = field(default_factory=Simes)
    dependence: str = "prds"

    def __post_init__(self):
        groups = tuple(_index_tuple(g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        G = len(groups)
        w = (1.0,) * G if self.w is None else tuple(float(x) for x in self.w)
        u = (1.0,) * G if self.u is None else tuple(float(x) for x in self.u)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "u", u)
        lam = (0.5 if self.adaptive else 1.0) if self.lam is None else float(self.lam)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "adaptive", bool(self.adaptive))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @cached_property
    def w_arr(self) -> np.ndarray:
        return _frozen_array(self.w)

    @cached_property
    def u_arr(self) -> np.ndarray:
        return _frozen_array(self.u)

    @property
    def max_norm(self) -> float:
        """``max_g u_g w_g``."""
        return float(np.max(self.u_arr * self.w_arr)) if self.n_groups else 0.0

    def with_alpha(self, alpha: float) -> "Layer":
        return replace(self, alpha=alpha)


def _frozen_array(values) -> np.ndarray:
    a = np.array(values, dtype=float)
    a.setflags(write=False)
    return a


def finest_layer(n: int, alpha: float, **kwargs) -> Layer:
    """The partition into ``n`` singletons."""
    return Layer(groups=tuple((i,) for i in range(n)), alpha=alpha, **kwargs)


def coarsest_layer(n: int, alpha: float, **kwargs) -> Layer:
    """A single group holding every hypothesis."""
    return Layer(groups=(tuple(range(n)),), alpha=alpha, **kwargs)


@dataclass(frozen=True, eq=False)
class Problem:
    pvalues: tuple[float, ...]
    layers: tuple[Layer, ...]
    ic: str = "weak"

    def __post_init__(self):
        object.__setattr__(self, "pvalues", tuple(float(x) for x in np.asarray(self.pvalues, dtype=float).ravel()))
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def n(self) -> int:
        return len(self.pvalues)

    @property
    def M(self) -> int:
        return len(self.layers)

    @cached_property
    def p(self) -> np.ndarray:
        return _frozen_array(self.pvalues)

    def with_pvalues(self, p) -> "Problem":
        return replace(self, pvalues=tuple(np.asarray(p, dtype=float)))

    @cached_property
    def memberships(self) -> tuple[np.ndarray, ...]:
        """Per layer, the ``n x G`` 0/1 matrix with entry 1 iff ``i`` is in group ``g``."""
        mats = []
        for layer in self.layers:
            mat = np.zeros((self.n, layer.n_groups), dtype=np.int64)
            for g, members in enumerate(layer.groups):
                mat[list(members), g] = 1
            mat.setflags(write=False)
            mats.append(mat)
        return tuple(mats)

    @cached_property
    def hypothesis_prior_weights(self) -> Optional[np.ndarray]:
        """Prior weights of the first finest (all-singleton, complete) layer, per hypothesis."""
        for layer in self.layers:
            if layer.n_groups != self.n or any(len(g) != 1 for g in layer.groups):
                continue
            idx = [g[0] for g in layer.groups]
            if sorted(idx) != list(range(self.n)):
                continue
            w = np.empty(self.n)
            w[idx] = layer.w
            return w
        return None


@dataclass(frozen=True, eq=False)
class RejectionResult:
    """Output of the p-filter.

    ``elementary`` holds the rejected hypotheses, ``per_layer[m]`` the
    rejected groups of layer ``m``.
    """

    elementary: tuple[int, ...]
    per_layer: tuple[tuple[int, ...], ...]
    k_hat: KVector
    pi_hat: np.ndarray
    group_pvalues: tuple[np.ndarray, ...]
    cycles: int = 0


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    message: str
    layer: Optional[int] = None
    group: Optional[int] = None

    def __str__(self) -> str:
        where = []
        if self.layer is not None:
            where.append(f"layer {self.layer}")
        if self.group is not None:
            where.append(f"group {self.group}")
        return f"{', '.join(where)}: {self.message}" if where else self.message


class ValidationError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def _positive_finite(x: float) -> bool:
    return math.isfinite(x) and x > 0


def validate_layer(layer: Layer, n: int, index: Optional[int] = None) -> list[Violation]:
    out: list[Violation] = []

    def bad(msg, group=None):
        out.append(Violation(msg, index, group))

    G = layer.n_groups
    if G == 0:
        bad("layer has no groups")
        return out
    for g, members in enumerate(layer.groups):
        if not members:
            bad("empty group", g)
        if any(i < 0 or i >= n for i in members):
            bad(f"index out of range [0, {n})", g)
        if len(set(members)) != len(members):
            bad("duplicate index within group", g)
    if len(layer.w) != G:
        bad(f"{len(layer.w)} prior weights for {G} groups")
    if len(layer.u) != G:
        bad(f"{len(layer.u)} penalty weights for {G} groups")
    if len(layer.w) == G and len(layer.u) == G:
        for g in range(G):
            if not _positive_finite(layer.w[g]):
                bad(f"prior weight {layer.w[g]} is not positive and finite", g)
            if not _positive_finite(layer.u[g]):
                bad(f"penalty weight {layer.u[g]} is not positive and finite", g)
        total = math.fsum(a * b for a, b in zip(layer.u, layer.w))
        if not math.isclose(total, G, rel_tol=NORMALIZATION_RTOL, abs_tol=0.0):
            bad(f"weight normalization: {total:g} ≠ {G}")
    if not (0 <= layer.alpha <= 1):
        bad(f"alpha {layer.alpha} outside [0, 1]")
    if layer.adaptive:
        if not (0 < layer.lam < 1):
            bad(f"adaptive layer needs lambda in (0, 1), got {layer.lam}")
    elif layer.lam != 1:
        bad(f"non-adaptive layer must have lambda = 1, got {layer.lam}")
    if layer.dependence not in DEPENDENCE_LABELS:
        bad(f"unknown dependence label {layer.dependence!r}")
    if isinstance(layer.reshape, BY) and layer.reshape.domain_size < 1:
        bad("BY reshaping needs a positive domain size")

    spec = layer.combiner
    if isinstance(spec, External):
        if len(spec.values) != G:
            bad(f"{len(spec.values)} external group p-values for {G} groups")
        elif any(not (0 <= v <= 1) for v in spec.values):
            bad("external group p-values must lie in [0, 1]")
    elif isinstance(spec, (WeightedSimes, ReshapedWeightedSimes)) and spec.within_weights is not None:
        if len(spec.within_weights) != G:
            bad(f"{len(spec.within_weights)} within-group weight vectors for {G} groups")
        else:
            for g, (members, ww) in enumerate(zip(layer.groups, spec.within_weights)):
                if len(ww) != len(members):
                    bad(f"{len(ww)} within-group weights for {len(members)} members", g)
                elif any(not _positive_finite(x) for x in ww):
                    bad("within-group weights must be positive", g)
    elif isinstance(spec, Ruger):
        for g, members in enumerate(layer.groups):
            if not 1 <= spec.k <= len(members):
                bad(f"Ruger order {spec.k} exceeds group size {len(members)}", g)
    return out


def validate(problem: Problem) -> list[Violation]:
    """Every invariant violation of ``problem``; an empty list means valid."""
    out: list[Violation] = []
    n = problem.n
    if n < 1:
        out.append(Violation("need at least one p-value"))
    bad_p = [i for i, x in enumerate(problem.pvalues) if not (0 <= x <= 1)]
    if bad_p:
        out.append(Violation(f"p-values outside [0, 1] at indices {bad_p[:10]}"))
    if problem.M < 1:
        out.append(Violation("need at least one layer"))
    if problem.ic not in IC_MODES:
        out.append(Violation(f"unknown internal-consistency mode {problem.ic!r}"))
    for m, layer in enumerate(problem.layers):
        out.extend(validate_layer(layer, n, m))
    if not out and n:
        covered = np.zeros(n, dtype=bool)
        for layer in problem.layers:
            for members in layer.groups:
                covered[list(members)] = True
        orphans = np.flatnonzero(~covered)
        if orphans.size:
            out.append(Violation(
                f"indices {orphans[:10].tolist()} belong to no group in any layer "
                "(they would be rejected unconditionally)"
            ))
    return out


def check_valid(problem: Problem) -> None:
    violations = validate(problem)
    if violations:
        raise ValidationError(violations)


def leftover(layer: Layer, n: int) -> frozenset[int]:
    """Hypotheses in no group of ``layer``."""
    covered = set()
    for members in layer.groups:
        covered.update(members)
    return frozenset(range(n)) - covered


def group_membership(layer: Layer, i: int, n: Optional[int] = None) -> frozenset[int]:
    """Indices of the groups of ``layer`` that contain hypothesis ``i``."""
    if i < 0 or (n is not None and i >= n):
        raise IndexError(f"hypothesis index {i} out of range")
    return frozenset(g for g, members in enumerate(layer.groups) if i in members)


def normalize(layer: Layer) -> Layer:
    """Rescale the prior weights so that ``sum_g u_g w_g = G`` exactly (up to rounding)."""
    total = math.fsum(a * b for a, b in zip(layer.u, layer.w))
    if not total > 0:
        raise ValueError("cannot normalize weights with nonpositive total")
    scale = layer.n_groups / total
    return replace(layer, w=tuple(x * scale for x in layer.w))


def null_groups(layer: Layer, nulls) -> frozenset[int]:
    """Groups consisting entirely of null hypotheses."""
    nulls = set(int(i) for i in nulls)
    return frozenset(g for g, members in enumerate(layer.groups) if set(members) <= nulls)
