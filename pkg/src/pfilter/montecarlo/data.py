"""Simulated p-values under independence, positive dependence and duplication.

Test statistics are ``X_i = Z_i + mu_i`` with ``mu_i = mu`` for non-nulls
and 0 for nulls; p-values are upper tails ``P_i = 1 - Phi(X_i)``.  Null
p-values are therefore exactly uniform.  ``Z`` is

* i.i.d. standard normal (:class:`Independent`),
* equicorrelated normal with correlation ``rho >= 0`` (PRDS),
* shared within blocks (:class:`DuplicateBlocks`), so null p-values in a
  block are exact copies of each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import special


@dataclass(frozen=True)
class Independent:
    def __str__(self):
        return "independent"


@dataclass(frozen=True)
class GaussianEquicorrelated:
    rho: float

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ValueError(f"equicorrelation rho must lie in [0, 1), got {self.rho}")

    def __str__(self):
        return f"gaussian_equicorrelated({self.rho:g})"


@dataclass(frozen=True)
class DuplicateBlocks:
    """Blocks of indices sharing one draw.

    Either consecutive blocks of ``block_size`` or an explicit ``blocks``
    tuple; indices outside every explicit block are independent.
    """

    block_size: Optional[int] = 2
    blocks: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        if self.blocks is None and (self.block_size is None or self.block_size < 1):
            raise ValueError("block_size must be a positive integer")
        if self.blocks is not None:
            object.__setattr__(self, "blocks", tuple(tuple(int(i) for i in b) for b in self.blocks))

    def labels(self, n: int) -> np.ndarray:
        """Block label of every index."""
        if self.blocks is None:
            return np.arange(n) // self.block_size
        lab = np.full(n, -1)
        for b, members in enumerate(self.blocks):
            lab[list(members)] = b
        free = np.flatnonzero(lab < 0)
        lab[free] = len(self.blocks) + np.arange(free.size)
        return lab

    def __str__(self):
        return f"duplicate_blocks({self.block_size})" if self.blocks is None else "duplicate_blocks(custom)"


Dependence = Union[Independent, GaussianEquicorrelated, DuplicateBlocks]


@dataclass(frozen=True)
class SimModel:
    n: int
    nulls: frozenset[int]
    dependence: Dependence = field(default_factory=Independent)
    mu: float = 3.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nulls", frozenset(int(i) for i in self.nulls))
        if any(not 0 <= i < self.n for i in self.nulls):
            raise ValueError("null indices out of range")

    @property
    def shift(self) -> np.ndarray:
        s = np.full(self.n, float(self.mu))
        s[list(self.nulls)] = 0.0
        return s

    @classmethod
    def all_null(cls, n: int, **kwargs) -> "SimModel":
        return cls(n=n, nulls=frozenset(range(n)), **kwargs)


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent stream for replication ``rep``; depends only on ``(seed, rep)``."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(rep)])


def _latent(dep: Dependence, n: int, size: tuple, rng: np.random.Generator) -> np.ndarray:
    if isinstance(dep, Independent):
        return rng.standard_normal(size + (n,))
    if isinstance(dep, GaussianEquicorrelated):
        e = rng.standard_normal(size + (n,))
        common = rng.standard_normal(size + (1,))
        return np.sqrt(dep.rho) * common + np.sqrt(1.0 - dep.rho) * e
    if isinstance(dep, DuplicateBlocks):
        lab = dep.labels(n)
        draws = rng.standard_normal(size + (int(lab.max()) + 1,))
        return draws[..., lab]
    raise TypeError(f"unknown dependence {dep!r}")


def gen_pvalues(model: SimModel, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """One vector of p-values; ``rng`` defaults to a generator seeded with ``model.seed``."""
    rng = np.random.default_rng(model.seed) if rng is None else rng
    z = _latent(model.dependence, model.n, (), rng)
    return special.ndtr(-(z + model.shift))


def gen_matrix(model: SimModel, reps: int, rng: np.random.Generator) -> np.ndarray:
    """``reps x n`` matrix of independent replications."""
    z = _latent(model.dependence, model.n, (reps,), rng)
    return special.ndtr(-(z + model.shift))
