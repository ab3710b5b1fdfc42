"""Single-layer procedures derived from the same self-consistency idea.

:func:`reference_stepup` computes the finest-partition special case of the
p-filter directly from sorted entry points, without the engine's
coordinate descent; it is used as an independent check of the engine.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .reshape import Identity, ReshapeSpec, reshape_eval, reshape_inverse

TOLERANCE = 1e-9


def _stepup_pi_hat(p, w, u, lam, adaptive) -> float:
    if not adaptive:
        return 1.0
    uw = u * w
    n = p.size
    return (uw.max() + float(np.sum(uw[p > lam]))) / (n * (1.0 - lam))


def reference_stepup(p, w=None, u=None, alpha: float = 0.1, reshape: ReshapeSpec = Identity(),
                     lam: Optional[float] = None, adaptive: bool = False) -> frozenset[int]:
    """Weighted, reshaped, optionally adaptive step-up over singleton groups.

    Finds the largest ``k`` in ``[0, n]`` with
    ``sum{u_i : P_i <= min(w_i alpha beta(k) / (pi n), lam)} >= k`` and
    returns that rejection set.  The largest such ``k`` always equals the
    (capped) penalty mass of a prefix of the hypotheses sorted by the ``k``
    at which they enter, so only those ``n + 1`` candidates are examined.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    u = np.ones(n) if u is None else np.asarray(u, dtype=float)
    if not math.isclose(float(np.sum(u * w)), n, rel_tol=1e-9):
        raise ValueError("weights must satisfy sum(u * w) == n")
    lam = (0.5 if adaptive else 1.0) if lam is None else lam
    pi = _stepup_pi_hat(p, w, u, lam, adaptive)

    def rejected(k: float) -> np.ndarray:
        thr = np.minimum(w * alpha * reshape_eval(reshape, k) / (pi * n), lam)
        return p <= thr

    entry = np.full(n, np.inf)
    for i in range(n):
        if p[i] > lam:
            continue
        if p[i] == 0:
            entry[i] = 0.0
        elif alpha > 0:
            entry[i] = reshape_inverse(reshape, p[i] * pi * n / (w[i] * alpha), upper=n)
    order = np.argsort(entry, kind="stable")
    candidates = [0.0]
    running = []
    for i in order:
        if not np.isfinite(entry[i]):
            break
        running.append(u[i])
        candidates.append(min(float(n), math.fsum(running)))

    best = 0.0
    for k in candidates:
        if k > best and float(np.sum(u[rejected(k)])) >= k - TOLERANCE:
            best = k
    return frozenset(np.flatnonzero(rejected(best)).tolist())


def fdp_hat(p, S: Iterable[int]) -> float:
    """Plug-in FDP estimate ``n max_{i in S} P_i / |S|``; 0 for empty ``S``."""
    p = np.asarray(p, dtype=float)
    S = list(S)
    if not S:
        return 0.0
    return p.size * float(p[S].max()) / len(S)


def structured_bh(p, family: Sequence[Iterable[int]], alpha: float) -> frozenset[int]:
    """Largest allowed set whose p-values are all at most ``alpha |T| / n``.

    The empty set is always allowed.  Ties on size go to the smaller
    :func:`fdp_hat`, then to the lexicographically smallest sorted index tuple.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    best: tuple = (0, 0.0, ())
    for T in family:
        T = tuple(sorted(set(int(i) for i in T)))
        if not T:
            continue
        size = len(T)
        if float(p[list(T)].max()) > alpha * size / n:
            continue
        key = (size, fdp_hat(p, T), T)
        if (key[0] > best[0]
                or (key[0] == best[0] and (key[1], key[2]) < (best[1], best[2]))):
            best = key
    return frozenset(best[2])


def _bh(p: np.ndarray, alpha: float) -> np.ndarray:
    m = p.size
    order = np.argsort(p, kind="stable")
    ok = np.flatnonzero(p[order] <= alpha * np.arange(1, m + 1) / m)
    if ok.size == 0:
        return np.zeros(m, dtype=bool)
    k = ok[-1] + 1
    return p <= alpha * k / m


def post_selection_bh(p, S: Iterable[int], alpha: float) -> frozenset[int]:
    """BH on the selected sub-vector at level ``alpha |S| / n``, in original indices."""
    p = np.asarray(p, dtype=float)
    S = sorted(set(int(i) for i in S))
    if not S:
        return frozenset()
    level = alpha * len(S) / p.size
    keep = _bh(p[S], level)
    return frozenset(S[j] for j in np.flatnonzero(keep))
