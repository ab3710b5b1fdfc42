"""Problem builders: random instances, the 4x4 grid and the FDR-control scenarios."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import combine as cb
from ..model import Layer, Problem, RejectionResult, null_groups
from ..reshape import BY, DiscreteMeasure, Identity
from .data import DuplicateBlocks, GaussianEquicorrelated, Independent, SimModel


# --------------------------------------------------------------------------
# random instances


def random_pvalues(rng: np.random.Generator, n: int, signal: float = 0.4) -> np.ndarray:
    """Mixture of uniform nulls and small beta-distributed signals."""
    p = rng.uniform(size=n)
    hot = rng.uniform(size=n) < signal
    p[hot] = rng.beta(0.25, 6.0, size=int(hot.sum()))
    return p


def _random_weights(rng, G, fractional):
    if not fractional:
        return np.ones(G), np.ones(G)
    u = rng.uniform(0.25, 2.0, size=G)
    w = rng.uniform(0.25, 2.0, size=G)
    w *= G / float(np.sum(u * w))
    return w, u


def _random_groups(rng, n, kind):
    idx = rng.permutation(n)
    if kind == "finest":
        return [(int(i),) for i in range(n)]
    if kind == "coarsest":
        return [tuple(int(i) for i in range(n))]
    if kind == "partition":
        G = int(rng.integers(1, n + 1))
        cuts = np.sort(rng.choice(np.arange(1, n), size=min(G - 1, n - 1), replace=False)) if n > 1 else []
        return [tuple(sorted(int(i) for i in chunk)) for chunk in np.split(idx, cuts) if len(chunk)]
    if kind == "incomplete":
        keep = idx[: int(rng.integers(1, n + 1))]
        G = int(rng.integers(1, keep.size + 1))
        cuts = np.sort(rng.choice(np.arange(1, keep.size), size=min(G - 1, keep.size - 1), replace=False)) \
            if keep.size > 1 else []
        return [tuple(sorted(int(i) for i in chunk)) for chunk in np.split(keep, cuts) if len(chunk)]
    if kind == "overlapping":
        G = int(rng.integers(1, n + 1))
        groups = set()
        for _ in range(G):
            size = int(rng.integers(1, min(n, 4) + 1))
            groups.add(tuple(sorted(int(i) for i in rng.choice(n, size=size, replace=False))))
        return sorted(groups)
    raise ValueError(kind)


def random_layer(rng: np.random.Generator, n: int, *, kind: Optional[str] = None,
                 fractional: Optional[bool] = None, features: bool = True,
                 combiners: tuple = ("simes", "wsimes", "rwsimes", "fisher", "bonferroni")) -> Layer:
    kind = kind or str(rng.choice(["finest", "partition", "incomplete", "overlapping", "coarsest"]))
    groups = _random_groups(rng, n, kind)
    G = len(groups)
    if fractional is None:
        fractional = bool(rng.uniform() < 0.5)
    w, u = _random_weights(rng, G, fractional)
    adaptive = features and bool(rng.uniform() < 0.3)
    reshape = Identity()
    if features:
        r = rng.uniform()
        if r < 0.2:
            reshape = BY(G)
        elif r < 0.3:
            reshape = DiscreteMeasure(((G / 4, 0.25), (G / 2, 0.25), (float(G), 0.5)))
    name = str(rng.choice(list(combiners)))
    combiner = {
        "simes": cb.Simes(), "wsimes": cb.WeightedSimes(), "rwsimes": cb.ReshapedWeightedSimes(),
        "fisher": cb.Fisher(), "bonferroni": cb.Bonferroni(), "stouffer": cb.Stouffer(),
    }[name]
    return Layer(
        groups=tuple(groups), alpha=float(rng.uniform(0.05, 0.5)),
        w=tuple(w), u=tuple(u), adaptive=adaptive, reshape=reshape, combiner=combiner,
        dependence="independent" if adaptive else "prds",
    )


def random_problem(rng: np.random.Generator, *, n_range=(2, 12), m_range=(1, 3),
                   ic: Optional[str] = None, fractional: Optional[bool] = None,
                   features: bool = True, kinds: Optional[tuple] = None) -> Problem:
    """A random valid multi-layer problem.

    Layers mix finest, complete, incomplete, overlapping and coarsest
    partitions; any hypothesis left uncovered by every layer is added to
    the first layer as a singleton so the problem validates.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    M = int(rng.integers(m_range[0], m_range[1] + 1))
    layers = []
    for _ in range(M):
        kind = str(rng.choice(list(kinds))) if kinds else None
        layers.append(random_layer(rng, n, kind=kind, fractional=fractional, features=features))
    covered = set()
    for layer in layers:
        for g in layer.groups:
            covered.update(g)
    missing = sorted(set(range(n)) - covered)
    if missing:
        first = layers[0]
        extra = tuple((i,) for i in missing)
        G = first.n_groups + len(extra)
        w = np.concatenate([first.w_arr, np.ones(len(extra))])
        u = np.concatenate([first.u_arr, np.ones(len(extra))])
        w *= G / float(np.sum(u * w))
        combiner = first.combiner
        if isinstance(combiner, cb.External):
            combiner = cb.Simes()
        reshape = BY(G) if isinstance(first.reshape, BY) else first.reshape
        layers[0] = Layer(
            groups=first.groups + extra, alpha=first.alpha, w=tuple(w), u=tuple(u),
            lam=first.lam, adaptive=first.adaptive, reshape=reshape, combiner=combiner,
            dependence=first.dependence,
        )
    if ic is None:
        ic = str(rng.choice(["weak", "strong"]))
    return Problem(pvalues=tuple(random_pvalues(rng, n)), layers=tuple(layers), ic=ic)


# --------------------------------------------------------------------------
# grids


def grid_rows(side: int = 4):
    return tuple(tuple(r * side + c for c in range(side)) for r in range(side))


def grid_columns(side: int = 4):
    return tuple(tuple(r * side + c for r in range(side)) for c in range(side))


def grid_blocks(side: int = 4, block: int = 2):
    out = []
    for br in range(0, side, block):
        for bc in range(0, side, block):
            out.append(tuple((br + r) * side + bc + c for r in range(block) for c in range(block)))
    return tuple(out)


def grid_diagonals(side: int = 4):
    """Wrapped diagonals: each meets every row and every column exactly once."""
    return tuple(tuple(r * side + (r + d) % side for r in range(side)) for d in range(side))


GRID_NON_NULLS = (0, 1, 4, 5)  # top-left 2x2 block: 25% of a 4x4 grid


def grid_model(dependence=None, mu: float = 3.0, seed: int = 0, side: int = 4,
               non_nulls=GRID_NON_NULLS) -> SimModel:
    n = side * side
    return SimModel(n=n, nulls=frozenset(range(n)) - set(non_nulls),
                    dependence=dependence or Independent(), mu=mu, seed=seed)


# --------------------------------------------------------------------------
# the worked 4x4 example with four partitions


def worked_grid_example():
    """Truth and discoveries on a 4x4 grid under four partitions.

    Partitions: elementary, rows, columns, 2x2 blocks.  Five non-nulls
    (the top-left block plus one cell below it); five discoveries (the
    top-left block plus one null cell to its right).  Returns
    ``(problem, nulls, result)`` where ``result`` rejects every group that
    contains a discovery.
    """
    side = 4
    n = side * side
    non_nulls = {0, 1, 4, 5, 9}
    discoveries = (0, 1, 2, 4, 5)
    layers = tuple(
        Layer(groups=groups, alpha=0.2)
        for groups in (tuple((i,) for i in range(n)), grid_rows(side), grid_columns(side), grid_blocks(side))
    )
    p = np.ones(n)
    p[list(discoveries)] = 0.001
    problem = Problem(pvalues=tuple(p), layers=layers, ic="weak")
    S = set(discoveries)
    per_layer = tuple(
        tuple(g for g, members in enumerate(layer.groups) if S.intersection(members))
        for layer in layers
    )
    result = RejectionResult(
        elementary=tuple(sorted(S)), per_layer=per_layer,
        k_hat=np.array([float(len(r)) for r in per_layer]), pi_hat=np.ones(len(layers)),
        group_pvalues=tuple(np.ones(layer.n_groups) for layer in layers),
    )
    nulls = frozenset(range(n)) - non_nulls
    return problem, nulls, result


# --------------------------------------------------------------------------
# FDR-control scenarios on the 4x4 grid with rows and columns


@dataclass(frozen=True)
class Scenario:
    name: str
    problem: Problem
    model: SimModel
    bounds: tuple[float, ...]

    def null_groups(self):
        return [null_groups(layer, self.model.nulls) for layer in self.problem.layers]


def _uw_null_share(layer: Layer, nulls) -> float:
    h0 = null_groups(layer, nulls)
    return float(sum(layer.u[g] * layer.w[g] for g in h0)) / layer.n_groups


def scenario_independent_adaptive(alpha: float = 0.2, seed: int = 0) -> Scenario:
    """Independent p-values, Simes groups, adaptivity on both layers."""
    model = grid_model(Independent(), seed=seed)
    layers = tuple(
        Layer(groups=g, alpha=alpha, adaptive=True, combiner=cb.Simes(), dependence="independent")
        for g in (grid_rows(), grid_columns())
    )
    problem = Problem(pvalues=(0.5,) * model.n, layers=layers)
    return Scenario("independent+adaptive", problem, model, (alpha, alpha))


def scenario_prds(rho: float, alpha: float = 0.2, seed: int = 0) -> Scenario:
    """Equicorrelated Gaussian (PRDS) p-values, Simes groups, no adaptivity or reshaping."""
    model = grid_model(GaussianEquicorrelated(rho), seed=seed)
    layers = tuple(
        Layer(groups=g, alpha=alpha, combiner=cb.WeightedSimes(), dependence="prds")
        for g in (grid_rows(), grid_columns())
    )
    problem = Problem(pvalues=(0.5,) * model.n, layers=layers)
    bounds = tuple(alpha * _uw_null_share(layer, model.nulls) for layer in layers)
    return Scenario(f"prds(rho={rho:g})", problem, model, bounds)


def scenario_arbitrary(alpha: float = 0.2, seed: int = 0) -> Scenario:
    """Duplicated p-values across groups, Fisher groups, BY reshaping.

    Duplication runs along wrapped diagonals, so every row and column
    holds independent p-values (Fisher stays valid) while the groups of
    each layer are strongly dependent on one another.
    """
    model = grid_model(DuplicateBlocks(blocks=grid_diagonals()), seed=seed)
    layers = tuple(
        Layer(groups=g, alpha=alpha, reshape=BY(len(g)), combiner=cb.Fisher(), dependence="arbitrary")
        for g in (grid_rows(), grid_columns())
    )
    problem = Problem(pvalues=(0.5,) * model.n, layers=layers)
    bounds = tuple(alpha * _uw_null_share(layer, model.nulls) for layer in layers)
    return Scenario("arbitrary+BY+fisher", problem, model, bounds)


def scenario_independent_groups(alpha: float = 0.2, seed: int = 0) -> Scenario:
    """Rows duplicated internally but independent of each other.

    The row layer uses reshaping and adaptivity with BY-reshaped Simes
    group p-values (valid under any within-group dependence).  Columns
    are mutually dependent, so that layer reshapes without adapting.
    """
    model = grid_model(DuplicateBlocks(blocks=grid_rows()), seed=seed)
    rows = Layer(groups=grid_rows(), alpha=alpha, adaptive=True, reshape=BY(4),
                 combiner=cb.ReshapedWeightedSimes(), dependence="independent")
    cols = Layer(groups=grid_columns(), alpha=alpha, reshape=BY(4),
                 combiner=cb.Simes(), dependence="arbitrary")
    problem = Problem(pvalues=(0.5,) * model.n, layers=(rows, cols))
    return Scenario("independent groups+BY+adaptive", problem, model, (alpha, alpha))
