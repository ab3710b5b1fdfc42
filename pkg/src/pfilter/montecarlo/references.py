"""Textbook single-layer step-up procedures, written from their sorted-p forms.

These share no code with the engine and serve as oracles for its
finest-partition special cases.  Each returns a boolean rejection mask.
"""

import math

import numpy as np


def _stepup(q, levels):
    # largest j with q_(j) <= levels[j-1]; 0 if none
    order = np.argsort(q, kind="stable")
    ok = np.flatnonzero(q[order] <= levels)
    return 0 if ok.size == 0 else int(ok[-1]) + 1


def bh_reference(p, alpha):
    p = np.asarray(p, dtype=float)
    n = p.size
    k = _stepup(p, alpha * np.arange(1, n + 1) / n)
    return p <= alpha * k / n


def by_reference(p, alpha):
    n = len(p)
    harmonic = math.fsum(1.0 / i for i in range(1, n + 1))
    p = np.asarray(p, dtype=float)
    k = _stepup(p, alpha * np.arange(1, n + 1) / n / harmonic)
    return p <= alpha * k / n / harmonic


def storey_bh_reference(p, alpha, lam=0.5):
    """Storey-BH with the ``(1 + #{P > lam}) / (n (1 - lam))`` null-proportion estimate."""
    p = np.asarray(p, dtype=float)
    n = p.size
    pi0 = (1.0 + np.count_nonzero(p > lam)) / (n * (1.0 - lam))
    levels = np.minimum(alpha * np.arange(1, n + 1) / (pi0 * n), lam)
    k = _stepup(p, levels)
    return p <= min(alpha * k / (pi0 * n), lam)


def weighted_bh_reference(p, w, alpha):
    """Prior-weighted BH: step up on ``P_i / w_i`` (weights averaging one)."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    n = p.size
    q = p / w
    k = _stepup(q, alpha * np.arange(1, n + 1) / n)
    return q <= alpha * k / n


def penalty_bh_reference(p, u, alpha):
    """Penalty-weighted BH (penalties averaging one).

    Rejects ``{P_i <= alpha k / n}`` for the largest ``k = min(n, U_j)``,
    ``U_j`` the penalty mass of the ``j`` smallest p-values, with
    ``P_(j) <= alpha k / n``.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    n = p.size
    order = np.argsort(p, kind="stable")
    best = 0.0
    for j in range(1, n + 1):
        k = min(float(n), math.fsum(u[order[:j]]))
        if p[order[j - 1]] <= alpha * k / n:
            best = max(best, k)
    return p <= alpha * best / n
