"""Stochastic checks of the super-uniformity, inverse-binomial and Simes properties.

Each checker simulates a ``reps x n`` matrix of p-values in one draw and
evaluates threshold functions row-wise, so a battery of 10^5 replications
runs in seconds.  Ratios follow the dotfraction convention: a zero
numerator contributes 0 whatever the denominator.

Threshold functions ``f`` are objects with a vectorized ``__call__``
mapping a ``reps x n`` matrix to a length-``reps`` vector:

* :class:`Constant` -- ``f(P) = t``;
* :class:`BHThreshold` -- ``alpha * k_BH(P) / n``, nonincreasing with the
  leave-one-out property;
* :class:`BHCount` -- ``k_BH(P)``, used as ``c * beta(f)`` with ``c = alpha / n``
  for the reshaped bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from ..reshape import BY, ReshapeSpec, reshape_eval
from .data import (
    Dependence, DuplicateBlocks, GaussianEquicorrelated, Independent, SimModel,
    gen_matrix,
)

N_SE = 3.0
DEFAULT_REPS = 100_000
SUITES = ("superuniformity", "group", "inverse-binomial", "simes-dist", "all")


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one check.

    ``kind`` is ``"eq"`` (``|estimate - target| <= 3 SE``), ``"leq"``
    (``estimate <= target + 3 SE``), ``"sandwich"`` (``lower - 3 SE <=
    estimate <= upper + 3 SE``, plus the exact value inside ``[lower,
    upper]`` with no slack), ``"ks"`` (``estimate <= target``) or
    ``"dominance"`` (every grid point satisfies its bound).
    """

    name: str
    kind: str
    estimate: float
    se: float
    target: float
    passed: bool
    lower: Optional[float] = None
    exact: Optional[float] = None
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        bits = [f"{verdict} {self.name}: estimate={self.estimate:.6g}"]
        if self.se:
            bits.append(f"se={self.se:.3g}")
        if self.lower is not None:
            bits.append(f"bounds=[{self.lower:.6g}, {self.target:.6g}]")
        else:
            bits.append(f"target={self.target:.6g}")
        if self.exact is not None:
            bits.append(f"exact={self.exact:.10g}")
        if self.detail:
            bits.append(self.detail)
        return " ".join(bits)


# --------------------------------------------------------------------------
# vectorized building blocks


def bh_count(P: np.ndarray, alpha: float) -> np.ndarray:
    """Row-wise BH discovery count."""
    P = np.atleast_2d(P)
    n = P.shape[1]
    ok = np.sort(P, axis=1) <= alpha * np.arange(1, n + 1) / n
    # index of the last True per row, plus one (0 when none)
    last = n - np.argmax(ok[:, ::-1], axis=1)
    return np.where(ok.any(axis=1), last, 0)


def simes_rows(P: np.ndarray, w: Optional[np.ndarray] = None,
               reshape: Optional[ReshapeSpec] = None) -> np.ndarray:
    """Row-wise (weighted, optionally reshaped) Simes p-values, clamped to 1."""
    P = np.atleast_2d(P)
    n = P.shape[1]
    Q = P if w is None else P / np.asarray(w, dtype=float)
    ranks = np.arange(1, n + 1, dtype=float)
    if reshape is not None:
        ranks = np.array([reshape_eval(reshape, k) for k in range(1, n + 1)])
    Qs = np.sort(Q, axis=1)
    with np.errstate(divide="ignore"):
        vals = np.where(ranks > 0, Qs * n / np.where(ranks > 0, ranks, 1.0), np.inf)
    return np.minimum(vals.min(axis=1), 1.0)


def fisher_rows(P: np.ndarray) -> np.ndarray:
    P = np.atleast_2d(P)
    m = P.shape[1]
    with np.errstate(divide="ignore"):
        stat = -2.0 * np.log(P).sum(axis=1)
    return special.gammaincc(m, stat / 2.0)


@dataclass(frozen=True)
class Constant:
    t: float

    def __call__(self, P):
        return np.full(np.atleast_2d(P).shape[0], float(self.t))

    def __str__(self):
        return f"constant({self.t:g})"


@dataclass(frozen=True)
class BHThreshold:
    alpha: float

    def __call__(self, P):
        P = np.atleast_2d(P)
        return self.alpha * bh_count(P, self.alpha) / P.shape[1]

    def __str__(self):
        return f"bh_threshold({self.alpha:g})"


@dataclass(frozen=True)
class BHCount:
    alpha: float

    def __call__(self, P):
        return bh_count(P, self.alpha).astype(float)

    def __str__(self):
        return f"bh_count({self.alpha:g})"


def _dot_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise dotfraction ``num / den`` for ``num`` in {0, 1}; raises on ``1/0``."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if np.any((num != 0) & (den == 0)):
        raise ArithmeticError("undefined dotfraction: nonzero numerator over zero")
    out = np.zeros_like(num)
    nz = num != 0
    out[nz] = num[nz] / den[nz]
    return out


def _mean_se(x: np.ndarray):
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


# --------------------------------------------------------------------------
# checkers


def check_superuniformity(model: SimModel, f, mode: str = "leq", reps: int = DEFAULT_REPS,
                          seed: int = 0, index: Optional[int] = None, name: str = "") -> CheckResult:
    """Estimate ``E[ 1{P_i <= f(P)} / f(P) ]`` for a null ``i``.

    ``mode="eq"`` checks the target 1 two-sided (uniform independent nulls
    with a leave-one-out threshold), ``mode="leq"`` one-sided.
    """
    if mode not in ("eq", "leq"):
        raise ValueError(f"mode must be 'eq' or 'leq', got {mode!r}")
    i = min(model.nulls) if index is None else int(index)
    if i not in model.nulls:
        raise ValueError(f"hypothesis {i} is not null")
    P = gen_matrix(model, reps, _rng(seed))
    fv = f(P)
    x = _dot_ratio(P[:, i] <= fv, fv)
    est, se = _mean_se(x)
    ok = abs(est - 1.0) <= N_SE * se if mode == "eq" else est <= 1.0 + N_SE * se
    return CheckResult(name or f"superuniformity[{mode}] {f} {model.dependence}", mode, est, se, 1.0, ok)


def check_group_superuniformity(model: SimModel, group: Sequence[int], f, variant: str = "simes",
                                reps: int = DEFAULT_REPS, seed: int = 0, *,
                                weights=None, subgroups: Optional[Sequence[Sequence[int]]] = None,
                                T=None, beta: Optional[ReshapeSpec] = None, c: float = 1.0,
                                name: str = "") -> CheckResult:
    """Estimate the group-level super-uniformity quantity for a null group.

    ``variant``:

    * ``"simes"`` -- ``E[ 1{Simes_w(P_A) <= f(P)} / f(P) ]``;
    * ``"nested"`` -- Simes of the Simes p-values of ``subgroups`` in place of
      ``Simes_w(P_A)`` (``group`` is ignored);
    * ``"reshaped"`` -- ``E[ 1{T(P_A) <= c beta(f(P))} / (c f(P)) ]`` for a
      valid group p-value ``T`` (default Fisher) and reshaping ``beta``.
    """
    P = gen_matrix(model, reps, _rng(seed))
    fv = f(P)
    if variant == "simes":
        _require_null(model, group)
        stat = simes_rows(P[:, list(group)], weights)
        x = _dot_ratio(stat <= fv, fv)
    elif variant == "nested":
        if not subgroups:
            raise ValueError("nested variant needs subgroups")
        for s in subgroups:
            _require_null(model, s)
        inner = np.column_stack([simes_rows(P[:, list(s)]) for s in subgroups])
        stat = simes_rows(inner)
        x = _dot_ratio(stat <= fv, fv)
    elif variant == "reshaped":
        _require_null(model, group)
        if beta is None:
            raise ValueError("reshaped variant needs a reshaping function")
        T = T or fisher_rows
        stat = T(P[:, list(group)])
        bf = np.array([reshape_eval(beta, v) for v in fv])
        x = _dot_ratio(stat <= c * bf, c * fv)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    est, se = _mean_se(x)
    return CheckResult(name or f"group[{variant}] {f} {model.dependence}", "leq", est, se, 1.0,
                       est <= 1.0 + N_SE * se)


def _require_null(model: SimModel, group):
    if not set(group) <= model.nulls:
        raise ValueError(f"group {tuple(group)} is not entirely null")


def inverse_binomial_exact(a: Sequence[float], b: float) -> float:
    """``E[1 / (1 + sum a_i Z_i)]`` with ``Z_i`` i.i.d. Bernoulli(``b``), by enumeration."""
    a = np.asarray(a, dtype=float)
    d = a.size
    if d > 20:
        raise ValueError("exact enumeration is limited to d <= 20")
    if b == 1.0:
        # degenerate: Z = 1 + sum(a) surely
        return 1.0 / (1.0 + math.fsum(a))
    outcomes = ((np.arange(2**d)[:, None] >> np.arange(d)) & 1).astype(float)
    ones = outcomes.sum(axis=1)
    prob = b ** ones * (1.0 - b) ** (d - ones)
    Z = 1.0 + outcomes @ a
    return math.fsum(prob / Z) / math.fsum(prob)


def inverse_binomial_bounds(a: Sequence[float], b: float) -> tuple[float, float]:
    s = math.fsum(a)
    return 1.0 / (1.0 + b * s), 1.0 / (b * (1.0 + s))


def check_inverse_binomial(a: Sequence[float], b: float, reps: int = DEFAULT_REPS,
                           seed: int = 0, name: str = "") -> CheckResult:
    """Monte Carlo and (for ``d <= 20``) exact ``E[1/Z]`` against the bounds
    ``1/(1 + b sum a) <= E[1/Z] <= 1/(b (1 + sum a))``."""
    a = np.asarray(a, dtype=float)
    if np.any((a < 0) | (a > 1)):
        raise ValueError("a must lie in [0, 1]^d")
    if not 0 < b <= 1:
        raise ValueError("b must lie in (0, 1]")
    lo, hi = inverse_binomial_bounds(a, b)
    Zs = 1.0 + (_rng(seed).uniform(size=(reps, a.size)) < b) @ a
    est, se = _mean_se(1.0 / Zs)
    ok = lo - N_SE * se <= est <= hi + N_SE * se
    exact = None
    if a.size <= 20:
        exact = inverse_binomial_exact(a, b)
        ok = ok and lo <= exact <= hi
    label = name or f"inverse_binomial d={a.size} b={b:g}"
    return CheckResult(label, "sandwich", est, se, hi, ok, lower=lo, exact=exact)


def ks_critical(reps: int) -> float:
    """Kolmogorov-Smirnov 1% critical value for ``reps`` draws."""
    return 1.63 / math.sqrt(reps)


def check_simes_distribution(m: int, weights=None, dependence: Dependence = Independent(),
                             reps: int = DEFAULT_REPS, seed: int = 0, *, reshape: Optional[ReshapeSpec] = None,
                             mode: Optional[str] = None, grid=None, name: str = "") -> CheckResult:
    """Distribution of (weighted, reshaped) Simes p-values under the global null.

    ``mode="ks"`` (default for independent data without reshaping): the
    Kolmogorov-Smirnov distance from uniform over ``[0, min(1, 1/max w)]``,
    where the weighted Simes p-value is exactly uniform.  ``mode="dominance"``:
    empirical CDF ``F(t) <= t + 3 SE`` at every grid point, ``SE = sqrt(t(1-t)/reps)``.
    """
    w = None if weights is None else np.asarray(weights, dtype=float)
    if w is not None and (w.size != m or not math.isclose(float(w.sum()), m, rel_tol=1e-9)):
        raise ValueError("weights must have length m and sum to m")
    if mode is None:
        mode = "ks" if isinstance(dependence, Independent) and reshape is None else "dominance"
    model = SimModel.all_null(m, dependence=dependence)
    vals = np.sort(simes_rows(gen_matrix(model, reps, _rng(seed)), w, reshape))
    label = name or f"simes_dist[{mode}] m={m} {dependence}" + (f" {reshape}" if reshape else "")
    if mode == "ks":
        cap = 1.0 if w is None else min(1.0, 1.0 / float(w.max()))
        N = vals.size
        idx = np.arange(1, N + 1)
        inside = vals <= cap
        D = 0.0
        if inside.any():
            x = vals[inside]
            i = idx[inside]
            D = float(max(np.max(i / N - x), np.max(x - (i - 1) / N)))
        # the CDF just above the cap must also match
        D = max(D, abs(np.count_nonzero(inside) / N - cap))
        crit = ks_critical(reps)
        return CheckResult(label, "ks", D, 0.0, crit, D <= crit, detail=f"support=[0, {cap:g}]")
    if mode != "dominance":
        raise ValueError(f"unknown mode {mode!r}")
    grid = np.array(grid if grid is not None else [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
    F = np.searchsorted(vals, grid, side="right") / vals.size
    se = np.sqrt(grid * (1 - grid) / vals.size)
    excess = F - grid - N_SE * se
    worst = int(np.argmax(excess))
    return CheckResult(label, "dominance", float(F[worst]), float(se[worst]), float(grid[worst]),
                       bool(np.all(excess <= 0)), detail=f"worst t={grid[worst]:g}")


# --------------------------------------------------------------------------
# batteries


def _mixed_model(dep: Dependence, n: int = 10, n_nulls: int = 6, mu: float = 2.0) -> SimModel:
    return SimModel(n=n, nulls=frozenset(range(n_nulls)), dependence=dep, mu=mu)


def superuniformity_suite(reps: int = DEFAULT_REPS, seed: int = 0) -> list[CheckResult]:
    ind = _mixed_model(Independent())
    prds = _mixed_model(GaussianEquicorrelated(0.5))
    return [
        check_superuniformity(ind, Constant(0.3), "eq", reps, seed),
        check_superuniformity(ind, BHThreshold(0.2), "eq", reps, seed + 1),
        check_superuniformity(prds, BHThreshold(0.2), "leq", reps, seed + 2),
        check_superuniformity(_mixed_model(Independent(), n_nulls=10), BHThreshold(0.2), "eq", reps, seed + 3),
    ]


def group_suite(reps: int = DEFAULT_REPS, seed: int = 0) -> list[CheckResult]:
    ind = _mixed_model(Independent())
    prds = _mixed_model(GaussianEquicorrelated(0.5))
    # blocks of two: the group takes one index from each of three blocks,
    # so Fisher is valid on it while the rest of the data copies it
    dup = _mixed_model(DuplicateBlocks(block_size=2))
    return [
        check_group_superuniformity(ind, (0, 1, 2), Constant(0.2), "simes", reps, seed),
        check_group_superuniformity(ind, (0, 1, 2), BHThreshold(0.2), "simes", reps, seed + 1,
                                    weights=(0.5, 1.0, 1.5)),
        check_group_superuniformity(prds, (0, 1, 2), BHThreshold(0.2), "simes", reps, seed + 2),
        check_group_superuniformity(ind, (), Constant(0.2), "nested", reps, seed + 3,
                                    subgroups=((0, 1), (2, 3), (4, 5))),
        check_group_superuniformity(prds, (), BHThreshold(0.2), "nested", reps, seed + 4,
                                    subgroups=((0, 1, 2), (2, 3), (4, 5))),
        check_group_superuniformity(dup, (0, 2, 4), BHCount(0.2), "reshaped", reps, seed + 5,
                                    beta=BY(10), c=0.2 / 10),
    ]


INVERSE_BINOMIAL_CASES = (
    ((1.0,), 0.5),
    ((0.5, 0.5), 0.5),
    ((1.0, 1.0, 1.0), 1.0),
    ((0.2, 0.9, 1.0, 0.4, 0.7), 0.3),
    (tuple(np.linspace(0.05, 1.0, 20)), 0.1),
    (tuple(np.linspace(0.05, 1.0, 20)), 0.9),
)


def inverse_binomial_suite(reps: int = DEFAULT_REPS, seed: int = 0) -> list[CheckResult]:
    return [check_inverse_binomial(a, b, reps, seed + j) for j, (a, b) in enumerate(INVERSE_BINOMIAL_CASES)]


def simes_distribution_suite(reps: int = DEFAULT_REPS, seed: int = 0) -> list[CheckResult]:
    w = np.array([0.5] * 5 + [1.5] * 5)
    return [
        check_simes_distribution(10, None, Independent(), reps, seed),
        check_simes_distribution(10, w, Independent(), reps, seed + 1),
        check_simes_distribution(10, None, GaussianEquicorrelated(0.5), reps, seed + 2),
        check_simes_distribution(10, None, DuplicateBlocks(block_size=2), reps, seed + 3, reshape=BY(10)),
    ]


_SUITES = {
    "superuniformity": superuniformity_suite,
    "group": group_suite,
    "inverse-binomial": inverse_binomial_suite,
    "simes-dist": simes_distribution_suite,
}


def run_suite(name: str, reps: int = DEFAULT_REPS, seed: int = 0) -> list[CheckResult]:
    """Run a named battery; ``"all"`` runs every battery in a fixed order."""
    if name == "all":
        return [r for key in _SUITES for r in _SUITES[key](reps, seed)]
    if name not in _SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return _SUITES[name](reps, seed)
