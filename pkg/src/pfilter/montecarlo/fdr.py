"""Monte Carlo estimates of per-layer FDR and power."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..engine import EngineOptions, fdp_layer, pfilter_unchecked, power_layer
from ..model import Problem, check_valid, null_groups
from .data import SimModel, gen_pvalues, replication_rng

MIN_REPS = 1000
THREADS_ENV = "PFILTER_THREADS"


class UndefinedFDP(RuntimeError):
    pass


@dataclass(frozen=True)
class SimReport:
    fdr: tuple[float, ...]
    fdr_se: tuple[float, ...]
    power: tuple[float, ...]
    power_se: tuple[float, ...]
    reps: int
    seed: int

    @property
    def M(self) -> int:
        return len(self.fdr)

    def within(self, bounds, n_se: float = 3.0) -> list[bool]:
        """Per layer, whether ``fdr <= bound + n_se * SE``."""
        return [f <= b + n_se * s for f, s, b in zip(self.fdr, self.fdr_se, bounds)]


def max_workers(requested: Optional[int] = None) -> int:
    """Worker count: ``requested`` or the CPU count, capped by ``PFILTER_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def _one_rep(problem: Problem, model: SimModel, nulls_per_layer, seed: int, rep: int, options):
    p = gen_pvalues(model, replication_rng(seed, rep))
    inst = problem.with_pvalues(p)
    result = pfilter_unchecked(inst, options)
    fdp, power = [], []
    for m in range(problem.M):
        d = fdp_layer(inst, result, nulls_per_layer[m], m)
        if d.is_undefined:
            raise UndefinedFDP(
                f"undefined FDP in layer {m} at replication {rep} (seed {seed}); "
                f"rejected groups {result.per_layer[m]}, p = {p.tolist()}"
            )
        fdp.append(float(d))
        pw = power_layer(inst, result, nulls_per_layer[m], m)
        power.append(0.0 if pw.is_undefined else float(pw))
    return fdp, power


def _run_chunk(args):
    problem, model, nulls_per_layer, seed, reps, options = args
    fdp = np.empty((len(reps), problem.M))
    power = np.empty_like(fdp)
    for j, rep in enumerate(reps):
        fdp[j], power[j] = _one_rep(problem, model, nulls_per_layer, seed, rep, options)
    return fdp, power


def simulate_fdp(problem: Problem, model: SimModel, reps: int, seed: Optional[int] = None,
                 options: Optional[EngineOptions] = None, workers: Optional[int] = None):
    """Per-replication FDP and power matrices (``reps x M``), in replication order."""
    if model.n != problem.n:
        raise ValueError(f"model has n = {model.n} but the problem has n = {problem.n}")
    seed = model.seed if seed is None else int(seed)
    template = problem.with_pvalues(np.full(problem.n, 0.5))
    check_valid(template)
    nulls_per_layer = [null_groups(layer, model.nulls) for layer in problem.layers]
    workers = max_workers(workers)
    chunks = [range(a, min(a + 250, reps)) for a in range(0, reps, 250)]
    jobs = [(template, model, nulls_per_layer, seed, c, options) for c in chunks]
    if workers == 1 or len(jobs) == 1:
        parts = [_run_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    if not parts:
        empty = np.empty((0, problem.M))
        return empty, empty
    return np.vstack([a for a, _ in parts]), np.vstack([b for _, b in parts])


def _mean_se(x: np.ndarray):
    reps = x.shape[0]
    mean = np.mean(x, axis=0)
    se = np.std(x, axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros(x.shape[1])
    return tuple(float(v) for v in mean), tuple(float(v) for v in se)


def estimate_fdr(problem: Problem, model: SimModel, reps: int, seed: Optional[int] = None,
                 options: Optional[EngineOptions] = None, workers: Optional[int] = None) -> SimReport:
    """Run the p-filter on ``reps`` simulated data sets and average FDP and power per layer.

    ``problem`` is a template whose p-values are replaced on each
    replication.  Replication ``r`` draws from its own stream derived from
    ``(seed, r)`` and results are combined in replication order, so the
    report does not depend on the number of workers.
    """
    if reps < MIN_REPS:
        raise ValueError(f"reps must be at least {MIN_REPS}, got {reps}")
    seed = model.seed if seed is None else int(seed)
    fdp, power = simulate_fdp(problem, model, reps, seed, options, workers)
    fdr, fdr_se = _mean_se(fdp)
    pw, pw_se = _mean_se(power)
    return SimReport(fdr=fdr, fdr_se=fdr_se, power=pw, power_se=pw_se, reps=reps, seed=seed)
