"""The p-filter: multi-layer step-up selection with internal consistency.

For a vector ``k`` of weighted discovery counts (one per layer) each layer
screens its groups with thresholds

    min(w_g * alpha * beta(k_m) / (pi_hat * G), lam),

the elementary rejections are the hypotheses that every layer accepts
(weak or strong internal consistency), and a group is rejected when it
passed screening and contains a rejected hypothesis.  ``k`` is feasible
when each layer's rejected penalty mass is at least ``k_m``; the
procedure reports the maximum feasible corner, found by cyclic
coordinate descent from ``k = (G_1, ..., G_M)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .adapt import pi_hat
from .combine import group_pvalues
from .model import (
    Dotfraction, Problem, RejectionResult, Violation, check_valid, dotfrac,
)
from .reshape import Identity, reshape_eval, reshape_inverse

DEFAULT_TOLERANCE = 1e-9
ORACLE_MAX_LATTICE = 10**6
ORACLE_MAX_N = 10**4


class CycleBudgetExceeded(RuntimeError):
    pass


class OracleTooLarge(ValueError):
    def __init__(self, size: int, limit: int, what: str = "lattice cells"):
        self.size = size
        self.limit = limit
        super().__init__(f"oracle instance has {size} {what}, limit is {limit}")


class CornerInfeasible(AssertionError):
    pass


@dataclass(frozen=True)
class EngineOptions:
    """``ic_mode=None`` defers to the problem's own mode; ``max_cycles=None``
    means ``10 * M * max_m G_m``."""

    ic_mode: Optional[str] = None
    max_cycles: Optional[int] = None
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.ic_mode not in (None, "weak", "strong"):
            raise ValueError(f"unknown internal-consistency mode {self.ic_mode!r}")


_DEFAULT_OPTIONS = EngineOptions()


def _elementary_mask(problem: Problem, ic: str, sels, leftover=None) -> np.ndarray:
    S = np.ones(problem.n, dtype=bool)
    for m, sel in enumerate(sels):
        memb = problem.memberships[m]
        if ic == "weak":
            left = leftover[m] if leftover is not None else memb.sum(axis=1) == 0
            S &= left | (memb @ sel.astype(np.int64) > 0)
        else:
            # leftover rows have no groups, so they pass automatically
            S &= memb @ (~sel).astype(np.int64) == 0
    return S


class _Engine:
    """Per-problem precomputation: group p-values, pi-hats, membership matrices."""

    def __init__(self, problem: Problem, ic: str, group_p=None, pi=None):
        self.problem = problem
        self.ic = ic
        self.layers = problem.layers
        self.M = problem.M
        self.G = np.array([layer.n_groups for layer in self.layers], dtype=float)
        if group_p is None:
            group_p = [group_pvalues(problem, m) for m in range(self.M)]
        self.group_p = [np.asarray(gp, dtype=float) for gp in group_p]
        if pi is None:
            pi = [pi_hat(layer, gp) for layer, gp in zip(self.layers, self.group_p)]
        self.pi = np.asarray(pi, dtype=float)
        self.memb = problem.memberships
        self.membT = [mat.T for mat in self.memb]
        self.leftover = [mat.sum(axis=1) == 0 for mat in self.memb]
        # per-group threshold scale w_g * alpha / (pi * G)
        self.scale = [
            layer.w_arr * layer.alpha / (self.pi[m] * layer.n_groups)
            for m, layer in enumerate(self.layers)
        ]

    def beta(self, m: int, k: float) -> float:
        spec = self.layers[m].reshape
        return float(k) if isinstance(spec, Identity) else reshape_eval(spec, k)

    def selection(self, m: int, k: float) -> np.ndarray:
        layer = self.layers[m]
        thr = self.scale[m] * self.beta(m, k)
        if layer.lam < 1:
            thr = np.minimum(thr, layer.lam)
        return self.group_p[m] <= thr

    def elementary(self, sels: Sequence[np.ndarray]) -> np.ndarray:
        return _elementary_mask(self.problem, self.ic, sels, self.leftover)

    def rejections(self, sels, S: np.ndarray) -> list[np.ndarray]:
        Si = S.astype(np.int64)
        return [sel & (self.membT[m] @ Si > 0) for m, sel in enumerate(sels)]

    def evaluate(self, k):
        sels = [self.selection(m, k[m]) for m in range(self.M)]
        S = self.elementary(sels)
        return sels, S, self.rejections(sels, S)

    def mass(self, m: int, rejected: np.ndarray) -> float:
        return float(np.sum(self.layers[m].u_arr[rejected]))

    def masses(self, k) -> np.ndarray:
        _, _, rej = self.evaluate(k)
        return np.array([self.mass(m, r) for m, r in enumerate(rej)])

    def inner_max(self, m: int, k: np.ndarray, tol: float, start: Optional[float] = None) -> float:
        # Descending iteration of the nondecreasing map k' -> min(G, mass(k')).
        # Every iterate bounds each feasible k' from above, so the first
        # iterate that is (tolerance-)feasible is the largest one.
        G = self.G[m]
        kk = np.array(k, dtype=float)
        cur = G if start is None else min(float(start), G)
        for _ in range(10 * (int(G) + 2) + 10):
            kk[m] = cur
            _, _, rej = self.evaluate(kk)
            nxt = min(G, self.mass(m, rej[m]))
            if nxt >= cur - tol:
                return cur
            cur = nxt
        raise CycleBudgetExceeded(f"inner maximisation on layer {m} did not settle")

    def run(self, options: EngineOptions) -> RejectionResult:
        tol = options.tolerance
        k = self.G.copy()
        budget = options.max_cycles or 10 * self.M * int(self.G.max())
        cycles = 0
        while True:
            cycles += 1
            if cycles > budget:
                raise CycleBudgetExceeded(
                    f"no fixed point after {budget} cycles; last k = {k.tolist()}, "
                    f"tolerance = {tol}"
                )
            changed = False
            for m in range(self.M):
                # the previous value of k_m bounds the new maximum from above
                new = self.inner_max(m, k, tol, start=k[m])
                if new != k[m]:
                    k[m] = new
                    changed = True
            if not changed:
                break
        _, S, rej = self.evaluate(k)
        k.setflags(write=False)
        return RejectionResult(
            elementary=tuple(np.flatnonzero(S).tolist()),
            per_layer=tuple(tuple(np.flatnonzero(r).tolist()) for r in rej),
            k_hat=k,
            pi_hat=self.pi.copy(),
            group_pvalues=tuple(self.group_p),
            cycles=cycles,
        )


def _ic_mode(problem: Problem, options: Optional[EngineOptions]) -> str:
    if options is not None and options.ic_mode is not None:
        return options.ic_mode
    return problem.ic


def _check_k(problem: Problem, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.shape != (problem.M,):
        raise ValueError(f"k must have one entry per layer ({problem.M}), got shape {k.shape}")
    G = np.array([layer.n_groups for layer in problem.layers], dtype=float)
    if np.any(k < 0) or np.any(k > G):
        raise ValueError(f"k = {k.tolist()} outside [0, G] = {G.tolist()}")
    return k


def _masks(n: int, sets) -> list[np.ndarray]:
    out = []
    for s in sets:
        a = np.zeros(n, dtype=bool)
        a[list(s)] = True
        out.append(a)
    return out


def initial_selection(problem: Problem, k, pi=None) -> list[frozenset[int]]:
    """Groups passing each layer's screening threshold at ``k``."""
    k = _check_k(problem, k)
    eng = _Engine(problem, problem.ic, pi=pi)
    return [frozenset(np.flatnonzero(eng.selection(m, k[m])).tolist()) for m in range(problem.M)]


def elementary_set(problem: Problem, s_init: Sequence, ic: Optional[str] = None) -> frozenset[int]:
    """Hypotheses accepted by every layer given the screened groups ``s_init``.

    Weak: some screened group contains ``i`` (or ``i`` is leftover).
    Strong: every group containing ``i`` is screened.
    """
    sels = [_masks(layer.n_groups, [s])[0] for layer, s in zip(problem.layers, s_init)]
    return frozenset(np.flatnonzero(_elementary_mask(problem, ic or problem.ic, sels)).tolist())


def layer_rejections(problem: Problem, S, s_init: Sequence) -> list[frozenset[int]]:
    """Screened groups that contain at least one rejected hypothesis."""
    S = set(S)
    return [
        frozenset(g for g in sel if S.intersection(problem.layers[m].groups[g]))
        for m, sel in enumerate(s_init)
    ]


def rejected_masses(problem: Problem, k, options: Optional[EngineOptions] = None) -> np.ndarray:
    """Per-layer penalty mass of the rejected groups at ``k``."""
    k = _check_k(problem, k)
    return _Engine(problem, _ic_mode(problem, options)).masses(k)


def is_feasible(problem: Problem, k, options: Optional[EngineOptions] = None) -> bool:
    opts = options or _DEFAULT_OPTIONS
    k = _check_k(problem, k)
    return bool(np.all(rejected_masses(problem, k, opts) >= k - opts.tolerance))


def inner_max(problem: Problem, m: int, k, options: Optional[EngineOptions] = None) -> float:
    """Largest ``k'`` in ``[0, G_m]`` that is self-consistent for layer ``m``
    with the other coordinates of ``k`` held fixed."""
    opts = options or _DEFAULT_OPTIONS
    k = _check_k(problem, k)
    return _Engine(problem, _ic_mode(problem, opts)).inner_max(m, k, opts.tolerance)


def pfilter(problem: Problem, options: Optional[EngineOptions] = None) -> RejectionResult:
    """Run the p-filter on a validated problem.

    Raises :class:`~pfilter.model.ValidationError` for invalid input and
    :class:`CycleBudgetExceeded` if the coordinate descent does not settle.
    """
    check_valid(problem)
    return pfilter_unchecked(problem, options)


def pfilter_unchecked(problem: Problem, options: Optional[EngineOptions] = None) -> RejectionResult:
    opts = options or _DEFAULT_OPTIONS
    return _Engine(problem, _ic_mode(problem, opts)).run(opts)


# --------------------------------------------------------------------------
# error accounting


def _rejected_u(problem: Problem, result: RejectionResult, m: int, groups) -> float:
    u = problem.layers[m].u
    return math.fsum(u[g] for g in result.per_layer[m] if g in groups)


def fdp_layer(problem: Problem, result: RejectionResult, null_groups, m: int) -> Dotfraction:
    """Penalty-weighted false discovery proportion of layer ``m``."""
    null_groups = set(null_groups)
    u = problem.layers[m].u
    num = _rejected_u(problem, result, m, null_groups)
    den = math.fsum(u[g] for g in result.per_layer[m])
    return dotfrac(num, den)


def power_layer(problem: Problem, result: RejectionResult, null_groups, m: int) -> Dotfraction:
    """Penalty-weighted fraction of the non-null groups of layer ``m`` that were rejected."""
    layer = problem.layers[m]
    non_null = set(range(layer.n_groups)) - set(null_groups)
    num = _rejected_u(problem, result, m, non_null)
    den = math.fsum(layer.u[g] for g in non_null)
    return dotfrac(num, den)


def check_ic(problem: Problem, result: RejectionResult, ic: Optional[str] = None) -> list[Violation]:
    """Violations of internal consistency in ``result`` (empty when consistent)."""
    ic = ic or problem.ic
    out: list[Violation] = []
    S = set(result.elementary)
    for m, layer in enumerate(problem.layers):
        for g in result.per_layer[m]:
            if not S.intersection(layer.groups[g]):
                out.append(Violation("rejected group has no rejected member", m, g))
    rejected_groups = [set(r) for r in result.per_layer]
    for i in range(problem.n):
        ok = True
        for m, layer in enumerate(problem.layers):
            containing = [g for g, members in enumerate(layer.groups) if i in members]
            if not containing:
                continue
            hit = [g in rejected_groups[m] for g in containing]
            if not (any(hit) if ic == "weak" else all(hit)):
                ok = False
                break
        if ok != (i in S):
            state = "rejected" if i in S else "accepted"
            out.append(Violation(f"hypothesis {i} is {state}, contradicting {ic} internal consistency"))
    return out


# --------------------------------------------------------------------------
# brute-force oracle


def _entry_points(eng: _Engine, m: int) -> list[float]:
    """Smallest ``k_m`` at which each group passes layer ``m``'s screening."""
    layer = eng.layers[m]
    G = float(layer.n_groups)
    pts = []
    for g, pg in enumerate(eng.group_p[m]):
        if pg > layer.lam:
            continue
        if pg == 0:
            pts.append(0.0)
            continue
        denom = layer.w[g] * layer.alpha
        if denom == 0:
            continue
        t = pg * eng.pi[m] * layer.n_groups / denom
        k = reshape_inverse(layer.reshape, t, upper=G)
        if math.isfinite(k):
            pts.append(k)
    return pts


def oracle_lattice_size(problem: Problem) -> int:
    """Upper bound on the number of lattice cells the oracle enumerates."""
    size = 1
    for layer in problem.layers:
        size *= layer.n_groups + 1
    return size


def check_oracle_size(problem: Problem, max_lattice: int = ORACLE_MAX_LATTICE,
                      max_n: int = ORACLE_MAX_N) -> None:
    """Raise :class:`OracleTooLarge` if exhaustive enumeration would be impractical."""
    if problem.n > max_n:
        raise OracleTooLarge(problem.n, max_n, "hypotheses")
    bound = oracle_lattice_size(problem)
    if bound > max_lattice:
        raise OracleTooLarge(bound, max_lattice)


def oracle_max_corner(problem: Problem, options: Optional[EngineOptions] = None,
                      max_lattice: int = ORACLE_MAX_LATTICE) -> np.ndarray:
    """Maximum feasible corner by exhaustive enumeration.

    Each layer's screened set changes only where some group's threshold
    reaches its p-value, so ``[0, G_m]`` splits into finitely many cells
    on which all selections are constant.  Every cell of the product
    lattice is tested for feasibility (at its lower corner, which is the
    smallest ``k`` in it); over feasible cells the largest attainable
    ``k_m`` is ``min(G_m, rejected mass of layer m)``.  The resulting
    corner is then checked to be feasible itself.
    """
    opts = options or _DEFAULT_OPTIONS
    check_oracle_size(problem, max_lattice)
    check_valid(problem)
    tol = opts.tolerance
    eng = _Engine(problem, _ic_mode(problem, opts))

    lowers, reps = [], []
    for m in range(eng.M):
        G = eng.G[m]
        cuts = sorted({0.0, *(k for k in _entry_points(eng, m) if k <= G)})
        uppers = cuts[1:] + [G]
        lowers.append(cuts)
        # interior representative keeps the selections clear of rounding at the cut
        reps.append([(a + b) / 2 if b > a else a for a, b in zip(cuts, uppers)])

    best = np.zeros(eng.M)
    for cell in itertools.product(*(range(len(c)) for c in lowers)):
        rep = [reps[m][j] for m, j in enumerate(cell)]
        low = np.array([lowers[m][j] for m, j in enumerate(cell)])
        _, _, rej = eng.evaluate(rep)
        mass = np.array([eng.mass(m, r) for m, r in enumerate(rej)])
        if np.all(mass >= low - tol):
            best = np.maximum(best, np.minimum(mass, eng.G))

    corner_mass = eng.masses(best)
    if not np.all(corner_mass >= best - tol):
        raise CornerInfeasible(
            f"componentwise maximum {best.tolist()} is not feasible (masses {corner_mass.tolist()})"
        )
    return best
