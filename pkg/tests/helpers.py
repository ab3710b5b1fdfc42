"""Shared test utilities."""

from fractions import Fraction

import numpy as np

from pfilter.model import dotfrac


def _defined(*ds):
    return all(not d.is_undefined for d in ds)


def dotfraction_violations(a, b, c, d) -> list[str]:
    """Names of the dotfraction laws that fail on ``(a, b, c, d)``.

    Each law is checked only when every dotfraction in it is defined.
    Inputs should be exact (``Fraction``) so equalities are exact.
    """
    bad = []
    # 1. comparing two fractions: a >= b >= 0, c >= 0
    hi, lo = max(a, b), min(a, b)
    x, y = dotfrac(hi, c), dotfrac(lo, c)
    if _defined(x, y) and not x >= y:
        bad.append("compare-numerators")
    x, y = dotfrac(c, hi), dotfrac(c, lo)
    if _defined(x, y) and not x <= y:
        bad.append("compare-denominators")
    # 2. comparing against a scalar: a >= b/c implies a c >= b
    x = dotfrac(b, c)
    if _defined(x) and a >= x and not a * c >= b:
        bad.append("scalar-compare")
    # 3. adding numerators
    x, y, z = dotfrac(a, c), dotfrac(b, c), dotfrac(a + b, c)
    if _defined(x, y, z) and (x + y).numeric != z.numeric:
        bad.append("add-numerators")
    # 4. multiplying fractions
    x, y, z = dotfrac(a, b), dotfrac(c, d), dotfrac(a * c, b * d)
    if _defined(x, y, z) and (x * y).numeric != z.numeric:
        bad.append("multiply")
    # 5. cancelling a nonzero factor
    if c != 0:
        x, y = dotfrac(a * c, b * c), dotfrac(a, b)
        if _defined(x, y) and x.numeric != y.numeric:
            bad.append("cancel")
    # 6. multiplying by a scalar
    x, y = dotfrac(a, b), dotfrac(a * c, b)
    if _defined(x, y) and (c * x).numeric != y.numeric:
        bad.append("scalar-multiply")
    return bad


def random_fraction(rng: np.random.Generator) -> Fraction:
    """Nonnegative rational with a heavy atom at zero."""
    if rng.uniform() < 0.3:
        return Fraction(0)
    return Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 20)))


def dotfraction_battery(cases: int, seed: int = 0) -> tuple[int, list]:
    """Run the laws on ``cases`` random quadruples; returns (checked, failures)."""
    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(cases):
        q = tuple(random_fraction(rng) for _ in range(4))
        bad = dotfraction_violations(*q)
        if bad:
            failures.append((q, bad))
    return cases, failures


def as_mask(n, idx):
    m = np.zeros(n, dtype=bool)
    m[list(idx)] = True
    return m
