"""Acceptance criteria, one test each.

Every test prints a ``PASS``/``FAIL`` line (also collected into the
terminal summary) before asserting.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import as_mask, dotfraction_battery
from pfilter import combine as cb
from pfilter.engine import fdp_layer, is_feasible, oracle_max_corner, pfilter, power_layer
from pfilter.extensions import post_selection_bh, reference_stepup, structured_bh
from pfilter.model import Layer, Problem, coarsest_layer, finest_layer
from pfilter.montecarlo import lemmas
from pfilter.montecarlo.fdr import estimate_fdr
from pfilter.montecarlo.references import (
    bh_reference, by_reference, penalty_bh_reference, storey_bh_reference, weighted_bh_reference,
)
from pfilter.montecarlo.scenarios import (
    worked_grid_example, random_problem, random_pvalues, scenario_arbitrary, scenario_independent_adaptive,
    scenario_independent_groups, scenario_prds,
)
from pfilter.reshape import BY

MC_REPS = 10_000


def record(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def _rejected(problem):
    return as_mask(problem.n, pfilter(problem).elementary)


def _random_p(rng, n):
    return random_pvalues(rng, n) if rng.uniform() < 0.7 else rng.uniform(size=n)


def _mean_one(rng, n):
    x = rng.uniform(0.2, 3.0, size=n)
    return x * n / x.sum()


# ---------------------------------------------------------------------- exact equivalences


def test_criterion_01_special_cases():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    bad = []
    for trial in range(1000):
        n = int(rng.integers(1, 51))
        p = _random_p(rng, n)
        alpha = float(rng.uniform(0.01, 0.5))
        w, u = _mean_one(rng, n), _mean_one(rng, n)
        cases = (
            ("bh", finest_layer(n, alpha), bh_reference(p, alpha)),
            ("by", finest_layer(n, alpha, reshape=BY(n)), by_reference(p, alpha)),
            ("storey", finest_layer(n, alpha, adaptive=True), storey_bh_reference(p, alpha)),
            ("weighted", finest_layer(n, alpha, w=tuple(w)), weighted_bh_reference(p, w, alpha)),
            ("penalty", finest_layer(n, alpha, u=tuple(u)), penalty_bh_reference(p, u, alpha)),
        )
        for name, layer, expected in cases:
            if not np.array_equal(_rejected(Problem(tuple(p), (layer,))), expected):
                bad.append((trial, name))
    elapsed = time.perf_counter() - start
    record(1, not bad and elapsed < 10,
           f"1000 instances x 5 procedures, {len(bad)} mismatches, {elapsed:.2f}s (< 10s)")


def test_criterion_02_global_null_reduction():
    rng = np.random.default_rng(2)
    bad = 0
    rejections = 0
    for _ in range(1000):
        n = int(rng.integers(1, 31))
        p = _random_p(rng, n)
        alpha = float(rng.uniform(0.01, 0.5))
        within = tuple(_mean_one(rng, n))
        plain = bool(pfilter(Problem(tuple(p), (coarsest_layer(n, alpha),))).elementary)
        layer = coarsest_layer(n, alpha, combiner=cb.WeightedSimes((within,)))
        weighted = bool(pfilter(Problem(tuple(p), (layer,))).elementary)
        bad += plain != (cb.simes(p) <= alpha)
        bad += weighted != (cb.weighted_simes(p, within) <= alpha)
        rejections += plain
    record(2, bad == 0, f"1000 instances, Simes and weighted Simes, {bad} mismatches ({rejections} rejections)")


def _oracle_instances():
    rng = np.random.default_rng(3)
    for trial in range(500):
        yield random_problem(rng, n_range=(2, 12), m_range=(1, 3), ic=("weak", "strong")[trial % 2])


def test_criterion_03_04_engine_matches_oracle():
    start = time.perf_counter()
    mismatches, infeasible = 0, 0
    seen = {"overlapping": 0, "incomplete": 0, "fractional": 0, "weak": 0, "strong": 0}
    for prob in _oracle_instances():
        seen[prob.ic] += 1
        for layer in prob.layers:
            covered = [i for g in layer.groups for i in g]
            seen["overlapping"] += len(covered) != len(set(covered))
            seen["incomplete"] += len(set(covered)) < prob.n
            seen["fractional"] += any(x != 1.0 for x in layer.u)
        corner = oracle_max_corner(prob)  # raises if the max corner is infeasible
        infeasible += not is_feasible(prob, corner)
        mismatches += not np.all(np.abs(pfilter(prob).k_hat - corner) <= 1e-9)
    elapsed = time.perf_counter() - start
    assert all(v > 0 for v in seen.values()), seen
    record(3, mismatches == 0 and elapsed < 60,
           f"500 instances, {mismatches} k_hat mismatches beyond 1e-9, {elapsed:.1f}s (< 60s); coverage {seen}")
    record(4, infeasible == 0, f"500 instances, {infeasible} infeasible componentwise-max corners")


# ---------------------------------------------------------------------- Monte Carlo guarantees


def _fdr_line(report, bounds):
    return "; ".join(
        f"layer {m}: FDR {f:.4f} (SE {s:.4f}) vs bound {b:.4f}, power {pw:.3f}"
        for m, (f, s, b, pw) in enumerate(zip(report.fdr, report.fdr_se, bounds, report.power))
    )


@pytest.mark.slow
def test_criterion_05_independent_adaptive():
    sc = scenario_independent_adaptive(alpha=0.2)
    start = time.perf_counter()
    rep = estimate_fdr(sc.problem, sc.model, MC_REPS, seed=5)
    elapsed = time.perf_counter() - start
    ok = all(rep.within(sc.bounds)) and all(p > 0 for p in rep.power) and elapsed < 300
    record(5, ok, f"{_fdr_line(rep, sc.bounds)}; {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_06_prds():
    lines, ok = [], True
    for rho in (0.25, 0.5):
        sc = scenario_prds(rho, alpha=0.2)
        rep = estimate_fdr(sc.problem, sc.model, MC_REPS, seed=6)
        ok &= all(rep.within(sc.bounds))
        lines.append(f"rho={rho}: {_fdr_line(rep, sc.bounds)}")
    record(6, ok, " | ".join(lines))


@pytest.mark.slow
def test_criterion_07_arbitrary_dependence():
    sc = scenario_arbitrary(alpha=0.2)
    rep = estimate_fdr(sc.problem, sc.model, MC_REPS, seed=7)
    bounds = tuple(layer.alpha for layer in sc.problem.layers)
    ok = all(rep.within(bounds))
    tighter = all(rep.within(sc.bounds))
    record(7, ok, f"{_fdr_line(rep, bounds)}; also within null-share bound: {tighter}")


@pytest.mark.slow
def test_criterion_08_independent_groups():
    sc = scenario_independent_groups(alpha=0.2)
    rep = estimate_fdr(sc.problem, sc.model, MC_REPS, seed=8)
    record(8, all(rep.within(sc.bounds)), _fdr_line(rep, sc.bounds))


@pytest.mark.slow
def test_criterion_09_lemma_batteries():
    results = lemmas.run_suite("all", lemmas.DEFAULT_REPS, seed=0)
    failed = [r.name for r in results if not r.passed]
    rng = np.random.default_rng(9)
    outside = 0
    for _ in range(300):
        d = int(rng.integers(1, 21))
        a = rng.uniform(0, 1, size=d)
        a[rng.uniform(size=d) < 0.2] = float(rng.choice([0.0, 1.0]))
        b = float(rng.uniform(0.05, 1.0))
        if not a.any():
            continue
        exact = lemmas.inverse_binomial_exact(a, b)
        lo, hi = lemmas.inverse_binomial_bounds(a, b)
        outside += not (lo <= exact <= hi)
    record(9, not failed and outside == 0,
           f"{len(results)} stochastic checks at {lemmas.DEFAULT_REPS} reps, failed {failed}; "
           f"exact inverse-binomial outside the sandwich: {outside}")


# ---------------------------------------------------------------------- worked example and properties


def test_criterion_10_worked_grid_example():
    problem, nulls, result = worked_grid_example()
    fdp, power = [], []
    for m, layer in enumerate(problem.layers):
        h0 = [g for g, members in enumerate(layer.groups) if set(members) <= nulls]
        fdp.append(fdp_layer(problem, result, h0, m).numeric)
        power.append(power_layer(problem, result, h0, m).numeric)
    want_fdp = [Fraction(1, 5), 0, Fraction(1, 3), Fraction(1, 2)]
    want_power = [Fraction(4, 5), Fraction(2, 3), 1, Fraction(1, 2)]
    ok = all(math.isclose(a, float(b), rel_tol=0, abs_tol=1e-15) for a, b in zip(fdp, want_fdp)) and \
        all(math.isclose(a, float(b), rel_tol=0, abs_tol=1e-15) for a, b in zip(power, want_power))
    record(10, ok, f"fdp {[round(x, 4) for x in fdp]}, power {[round(x, 4) for x in power]}")


def test_criterion_11_dotfraction_laws():
    checked, failures = dotfraction_battery(100_000, seed=11)
    record(11, checked == 100_000 and not failures, f"{checked} cases, {len(failures)} violations")


def test_criterion_12_monotonicity():
    rng = np.random.default_rng(12)
    bad_k, bad_s = 0, 0
    for _ in range(500):
        prob = random_problem(rng)
        p = prob.p.copy()
        lowered = np.where(rng.uniform(size=p.size) < 0.5, p * rng.uniform(size=p.size), p)
        a, b = pfilter(prob), pfilter(prob.with_pvalues(lowered))
        bad_k += not np.all(b.k_hat >= a.k_hat - 1e-9)
        bad_s += not set(a.elementary) <= set(b.elementary)
    record(12, bad_k == 0 and bad_s == 0, f"500 pairs, {bad_k} k_hat decreases, {bad_s} lost discoveries")


def test_criterion_13_structured_and_post_selection():
    rng = np.random.default_rng(13)
    bad_struct, bad_post = 0, 0
    for trial in range(500):
        n = int(rng.integers(1, 13))
        p = _random_p(rng, n)
        alpha = float(rng.uniform(0.01, 0.5))
        bh = set(np.flatnonzero(bh_reference(p, alpha)).tolist())
        family = [c for r in range(n + 1) for c in itertools.combinations(range(n), r)]
        bad_struct += structured_bh(p, family, alpha) != bh
        n2 = int(rng.integers(1, 51))
        p2 = _random_p(rng, n2)
        bh2 = set(np.flatnonzero(bh_reference(p2, alpha)).tolist())
        bad_post += post_selection_bh(p2, range(n2), alpha) != bh2
    record(13, bad_struct == 0 and bad_post == 0,
           f"500 instances each, structured_bh mismatches {bad_struct}, post_selection_bh mismatches {bad_post}")
