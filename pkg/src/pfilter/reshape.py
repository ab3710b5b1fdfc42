"""Reshaping functions built from probability measures on [0, inf).

A reshaping function has the form ``beta(k) = int_0^k x dnu(x)`` for a
probability measure ``nu``; it satisfies ``beta(k) <= k``, ``beta(0) = 0``
and is nondecreasing.  Three families are provided:

* :class:`Identity` -- ``beta(k) = k`` (no reshaping),
* :class:`BY` -- ``beta(k) = k / H`` with ``H = sum_{i<=N} 1/i``,
* :class:`DiscreteMeasure` -- finitely many atoms ``(x_j, mass_j)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Union

MASS_TOL = 1e-9


@dataclass(frozen=True)
class Identity:
    def __str__(self) -> str:
        return "identity"


@dataclass(frozen=True)
class BY:
    """Benjamini-Yekutieli reshaping over a domain of ``domain_size`` items."""

    domain_size: int
    harmonic: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.domain_size) != self.domain_size or self.domain_size < 1:
            raise ValueError(f"BY domain_size must be a positive integer, got {self.domain_size!r}")
        object.__setattr__(self, "domain_size", int(self.domain_size))
        object.__setattr__(self, "harmonic", math.fsum(1.0 / i for i in range(1, self.domain_size + 1)))


@dataclass(frozen=True)
class DiscreteMeasure:
    """A probability measure with finitely many positive atoms.

    ``atoms`` is a sequence of ``(x, mass)`` pairs; it is stored sorted by
    ``x`` and the masses must sum to one.
    """

    atoms: tuple[tuple[float, float], ...]
    _xs: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple(sorted((float(x), float(m)) for x, m in self.atoms))
        if not atoms:
            raise ValueError("DiscreteMeasure needs at least one atom")
        for x, m in atoms:
            if not x > 0:
                raise ValueError(f"atom location must be positive, got {x}")
            if not 0 < m <= 1:
                raise ValueError(f"atom mass must lie in (0, 1], got {m}")
        total = math.fsum(m for _, m in atoms)
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"atom masses sum to {total}, not 1")
        xs = tuple(x for x, _ in atoms)
        if len(set(xs)) != len(xs):
            raise ValueError("atom locations must be distinct")
        cum, running = [], []
        for x, m in atoms:
            running.append(x * m)
            cum.append(math.fsum(running))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_cum", tuple(cum))


ReshapeSpec = Union[Identity, BY, DiscreteMeasure]


def reshape_eval(spec: ReshapeSpec, k: float) -> float:
    """Evaluate ``beta(k)``.

    Atoms of a discrete measure are included with a closed comparison
    ``x_j <= k``, so the result is right-continuous in ``k``.
    """
    if k < 0:
        raise ValueError(f"reshaping functions are defined for k >= 0, got {k}")
    if isinstance(spec, Identity):
        return float(k)
    if isinstance(spec, BY):
        return k / spec.harmonic
    if isinstance(spec, DiscreteMeasure):
        j = bisect.bisect_right(spec._xs, k)
        return spec._cum[j - 1] if j else 0.0
    raise TypeError(f"unknown reshape spec {spec!r}")


def reshape_inverse(spec: ReshapeSpec, t: float, upper: float = math.inf) -> float:
    """Generalized inverse ``inf{k >= 0 : beta(k) >= t}``.

    Returns ``math.inf`` when no such ``k`` exists in ``[0, upper]``.  For
    :class:`BY` the search is also capped at the measure's own domain size.
    """
    if t <= 0:
        return 0.0
    if isinstance(spec, Identity):
        k = float(t)
    elif isinstance(spec, BY):
        k = t * spec.harmonic
        # float round trip: make sure beta(k) >= t holds bit-for-bit
        while k / spec.harmonic < t:
            k = math.nextafter(k, math.inf)
        if k > spec.domain_size:
            return math.inf
    elif isinstance(spec, DiscreteMeasure):
        j = bisect.bisect_left(spec._cum, t)
        if j == len(spec._cum):
            return math.inf
        k = spec._xs[j]
    else:
        raise TypeError(f"unknown reshape spec {spec!r}")
    return k if k <= upper else math.inf


def parse_reshape(obj, domain_size: int | None = None) -> ReshapeSpec:
    """Build a spec from its config form: ``"identity"``, ``"by"``, or ``{"atoms": [[x, m], ...]}``."""
    if obj is None or obj == "identity":
        return Identity()
    if obj == "by":
        if domain_size is None:
            raise ValueError("'by' reshaping needs a domain size")
        return BY(domain_size)
    if isinstance(obj, dict):
        if "atoms" in obj:
            return DiscreteMeasure(tuple(tuple(a) for a in obj["atoms"]))
        if "by" in obj:
            return BY(int(obj["by"]))
    raise ValueError(f"unrecognised reshape specification: {obj!r}")


def dump_reshape(spec: ReshapeSpec, domain_size: int | None = None):
    if isinstance(spec, Identity):
        return "identity"
    if isinstance(spec, BY):
        return "by" if spec.domain_size == domain_size else {"by": spec.domain_size}
    return {"atoms": [[x, m] for x, m in spec.atoms]}
