"""Command-line interface.

Subcommands::

    pfilter run --input problem.json [--output result.json] [--ic weak|strong]
    pfilter run --input pvalues.csv --alpha 0.1
    pfilter simulate --config sim.json --reps 10000 --seed 1 --output report.csv
    pfilter oracle --input problem.json
    pfilter check-lemmas --suite all --reps 100000 --seed 0

Exit codes: 0 success, 1 internal error (or oracle mismatch), 2 invalid
input, 3 instance too large for the oracle.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import engine
from .engine import EngineOptions, OracleTooLarge
from .io import InputError, loads_json, problem_from_csv, problem_from_dict, parse_problem, serialize_result
from .model import Problem, ValidationError, null_groups, validate
from .montecarlo import lemmas
from .montecarlo.data import DuplicateBlocks, GaussianEquicorrelated, Independent, SimModel
from .montecarlo.fdr import MIN_REPS, estimate_fdr
from .montecarlo import scenarios

log = logging.getLogger("pfilter")

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_ORACLE_SIZE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_problem(args) -> Problem:
    text = _read(args.input)
    if args.input.lower().endswith(".csv"):
        if args.alpha is None:
            raise UsageError("--alpha is required for CSV input")
        problem = problem_from_csv(text, args.alpha)
    else:
        problem = parse_problem(text)
    if args.ic:
        problem = replace(problem, ic=args.ic)
    violations = validate(problem)
    if violations:
        raise ValidationError(violations)
    return problem


def _options(args) -> EngineOptions:
    return EngineOptions(tolerance=args.tolerance)


# --------------------------------------------------------------------------
# run / oracle


def cmd_run(args) -> int:
    problem = _load_problem(args)
    result = engine.pfilter_unchecked(problem, _options(args))
    _write(args.output, serialize_result(result))
    return EXIT_OK


def cmd_oracle(args) -> int:
    problem = _load_problem(args)
    engine.check_oracle_size(problem)
    opts = _options(args)
    k_engine = engine.pfilter_unchecked(problem, opts).k_hat
    k_oracle = engine.oracle_max_corner(problem, opts)
    match = bool(np.all(np.abs(k_engine - k_oracle) <= 1e-9))
    lines = [
        f"engine k_hat: {json.dumps([float(k) for k in k_engine])}",
        f"oracle k_hat: {json.dumps([float(k) for k in k_oracle])}",
        "verdict: " + ("match" if match else "MISMATCH"),
    ]
    _write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK if match else EXIT_INTERNAL


# --------------------------------------------------------------------------
# simulate


SCENARIOS = {
    "independent_adaptive": lambda cfg: scenarios.scenario_independent_adaptive(cfg.get("alpha", 0.2)),
    "prds": lambda cfg: scenarios.scenario_prds(cfg.get("rho", 0.5), cfg.get("alpha", 0.2)),
    "arbitrary": lambda cfg: scenarios.scenario_arbitrary(cfg.get("alpha", 0.2)),
    "independent_groups": lambda cfg: scenarios.scenario_independent_groups(cfg.get("alpha", 0.2)),
}


def _parse_dependence(obj):
    if obj is None or obj == "independent":
        return Independent()
    if isinstance(obj, dict) and len(obj) == 1:
        (key, val), = obj.items()
        if key == "gaussian_equicorrelated":
            return GaussianEquicorrelated(float(val))
        if key == "duplicate_blocks":
            if isinstance(val, list):
                return DuplicateBlocks(blocks=tuple(tuple(b) for b in val))
            return DuplicateBlocks(block_size=int(val))
    raise InputError("model.dependence", f"unrecognised dependence {obj!r}")


def _default_bound(layer, nulls) -> float:
    if layer.adaptive:
        return layer.alpha
    h0 = null_groups(layer, nulls)
    return layer.alpha * sum(layer.u[g] * layer.w[g] for g in h0) / layer.n_groups


def load_sim_config(text: str):
    """Scenario from a simulation config: ``(problem, model, alphas)``.

    The config either names a built-in scenario (``{"scenario": "prds",
    "rho": 0.25}``) or gives a ``problem`` document (p-values optional)
    together with a ``model``: ``{"nulls": [...], "dependence": ...,
    "mu": 3.0}``.  An optional ``alphas`` list adds points to the plot data.
    """
    cfg = loads_json(text)
    if not isinstance(cfg, dict):
        raise InputError("config", "expected a JSON object")
    try:
        if "scenario" in cfg:
            name = cfg["scenario"]
            if name not in SCENARIOS:
                raise InputError("scenario", f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
            sc = SCENARIOS[name](cfg)
            problem, model = sc.problem, sc.model
        else:
            problem = problem_from_dict(cfg.get("problem"), require_p=False)
            mcfg = cfg.get("model", {})
            if not isinstance(mcfg, dict):
                raise InputError("model", "expected an object")
            nulls = mcfg.get("nulls", list(range(problem.n)))
            model = SimModel(n=problem.n, nulls=frozenset(nulls), dependence=_parse_dependence(mcfg.get("dependence")),
                             mu=float(mcfg.get("mu", 3.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError("config", str(exc)) from None
    alphas = cfg.get("alphas", [])
    if not isinstance(alphas, list):
        raise InputError("alphas", "expected an array of levels")
    return problem, model, sorted({float(a) for a in alphas})


def _with_alpha(problem: Problem, alpha: float) -> Problem:
    return replace(problem, layers=tuple(layer.with_alpha(alpha) for layer in problem.layers))


def cmd_simulate(args) -> int:
    if args.reps < MIN_REPS:
        raise UsageError(f"--reps must be at least {MIN_REPS}")
    problem, model, alphas = load_sim_config(_read(args.config))
    violations = validate(problem)
    if violations:
        raise ValidationError(violations)
    opts = _options(args)
    report = estimate_fdr(problem, model, args.reps, args.seed, opts)

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["layer", "alpha", "bound", "fdr", "fdr_se", "power", "power_se", "within_bound", "reps", "seed"])
    for m, layer in enumerate(problem.layers):
        bound = _default_bound(layer, model.nulls)
        ok = report.fdr[m] <= bound + 3 * report.fdr_se[m]
        writer.writerow([m, repr(layer.alpha), repr(bound), repr(report.fdr[m]), repr(report.fdr_se[m]),
                         repr(report.power[m]), repr(report.power_se[m]), str(ok).lower(),
                         report.reps, report.seed])
    _write(args.output, out.getvalue())

    plot = io.StringIO()
    pw = csv.writer(plot, lineterminator="\n")
    pw.writerow(["alpha", "layer", "fdr", "fdr_se"])
    rows = [[repr(layer.alpha), m, repr(report.fdr[m]), repr(report.fdr_se[m])]
            for m, layer in enumerate(problem.layers)]
    for a in alphas:
        rep = estimate_fdr(_with_alpha(problem, a), model, args.reps, args.seed, opts)
        rows.extend([repr(a), m, repr(rep.fdr[m]), repr(rep.fdr_se[m])] for m in range(problem.M))
    pw.writerows(rows)
    if args.output and args.output != "-":
        Path(plot_path(args.output)).write_text(plot.getvalue())
    return EXIT_OK


def plot_path(report_path: str) -> str:
    p = Path(report_path)
    return str(p.with_name(p.stem + ".plot.csv"))


# --------------------------------------------------------------------------
# check-lemmas


def cmd_check_lemmas(args) -> int:
    if args.suite not in lemmas.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(lemmas.SUITES)}")
    if args.reps < MIN_REPS:
        raise UsageError(f"--reps must be at least {MIN_REPS}")
    results = lemmas.run_suite(args.suite, args.reps, args.seed)
    _write(args.output, "".join(r.line() + "\n" for r in results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_INTERNAL


# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pfilter", description="Multi-layer FDR control with the p-filter.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, need_input=True):
        if need_input:
            p.add_argument("--input", required=True, help="problem JSON, or a CSV of p-values")
        p.add_argument("--output", help="output path (default: standard output)")
        p.add_argument("--ic", choices=("weak", "strong"), help="override the internal-consistency mode")
        p.add_argument("--tolerance", type=float, default=engine.DEFAULT_TOLERANCE,
                       help="feasibility tolerance (default 1e-9)")
        p.add_argument("--alpha", type=float, help="target level for CSV input")

    p_run = sub.add_parser("run", help="run the p-filter on one problem")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sim = sub.add_parser("simulate", help="Monte Carlo FDR and power for a scenario")
    p_sim.add_argument("--config", required=True, help="simulation config JSON")
    p_sim.add_argument("--reps", type=int, default=10_000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--output", help="report CSV; plot data goes to <stem>.plot.csv beside it")
    p_sim.add_argument("--tolerance", type=float, default=engine.DEFAULT_TOLERANCE)
    p_sim.set_defaults(func=cmd_simulate)

    p_or = sub.add_parser("oracle", help="compare the engine with exhaustive enumeration")
    common(p_or)
    p_or.set_defaults(func=cmd_oracle)

    p_lem = sub.add_parser("check-lemmas", help="run a stochastic lemma battery")
    p_lem.add_argument("--suite", default="all", help=f"one of {', '.join(lemmas.SUITES)}")
    p_lem.add_argument("--reps", type=int, default=lemmas.DEFAULT_REPS)
    p_lem.add_argument("--seed", type=int, default=0)
    p_lem.add_argument("--output", help="output path (default: standard output)")
    p_lem.set_defaults(func=cmd_check_lemmas)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValidationError, UsageError) as exc:
        if isinstance(exc, ValidationError):
            for v in exc.violations:
                log.error("%s", v)
        else:
            log.error("%s", exc)
        return EXIT_INVALID
    except OracleTooLarge as exc:
        log.error("%s", exc)
        return EXIT_ORACLE_SIZE
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - report and map to the internal-error code
        log.error("internal error: %s: %s", type(exc).__name__, exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
