"""
Command-line entry point.

    python -m rare_mcmc run --model fixed --beta 2 --n 5 --a 5 --T 100000 --seed 42
    python -m rare_mcmc run --preset fixed-n5-a1e4 --out results/deep
    python -m rare_mcmc probe --beta 2 --n 5 --grid 5,25,100,500 --T 20000
    python -m rare_mcmc oracle --beta 2 --n 2 --a 25
    python -m rare_mcmc oracle --fixture tests/fixtures/oracle_values.csv

Exit codes: 0 success, 1 every estimator failed, 2 invalid configuration,
3 oracle infeasible.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional
import argparse
import json
import logging
import sys

import numpy as np

from .config import configure_logging, get_settings
from .errors import ConfigError, DomainError, OracleInfeasibleError, RareMCMCError
from .services.distributions import make_count_distribution, make_step_distribution
from .services.estimators import normalized_variance_probe
from .services.harness import PRESETS, emit_csv, emit_probe_csv, parse_config, run_experiment
from .services.oracle import build_fixture, rejection_estimate, tail_prob_closed_form, tail_prob_quadrature

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ALL_FAILED = 1
EXIT_CONFIG = 2
EXIT_ORACLE = 3

CONFIG_KEYS = ("model", "dist", "beta", "shape", "scale", "count", "rho", "lam", "a", "n",
               "estimators", "T", "batches", "burnin", "seed", "is_weight", "trace_every",
               "timing", "threads", "label", "preset")


def _add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dist", choices=["pareto", "weibull"], help="step law (default pareto)")
    parser.add_argument("--beta", type=float, help="Pareto tail index")
    parser.add_argument("--shape", type=float, help="Weibull shape in (0, 1)")
    parser.add_argument("--scale", type=float, help="Weibull scale")
    parser.add_argument("--n", type=int, help="number of steps (fixed model)")
    parser.add_argument("--count", choices=["geometric", "poisson", "none"], help="law of the step count")
    parser.add_argument("--rho", type=float, help="geometric success probability")
    parser.add_argument("--lam", type=float, help="Poisson mean")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rare_mcmc",
                                     description="Rare-event estimation for heavy-tailed random walks")
    parser.add_argument("--log-level", help="logging level (default RARE_MCMC_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batched estimator comparison")
    run.add_argument("--config", help="JSON file with experiment keys; flags override it")
    run.add_argument("--preset", choices=sorted(PRESETS), help="start from a benchmark preset")
    run.add_argument("--model", choices=["fixed", "random"])
    _add_model_arguments(run)
    run.add_argument("--a", type=float, help="threshold scale a")
    run.add_argument("--estimators", help="comma list of mcmc,is,mc")
    run.add_argument("--T", type=int, help="walks per batch")
    run.add_argument("--batches", type=int, help="number of batches b")
    run.add_argument("--burnin", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--is-weight", dest="is_weight", type=float, help="defensive mixture weight w")
    run.add_argument("--trace-every", dest="trace_every", type=int, help="trace interval in draws (0 = off)")
    run.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                     help="write avg_time_s as 0 for byte-identical output")
    run.add_argument("--threads", type=int, help="worker processes (default RARE_MCMC_THREADS or cpu count)")
    run.add_argument("--label")
    run.add_argument("--out", help="output directory (default RARE_MCMC_OUTPUT_DIR)")

    probe = sub.add_parser("probe", help="normalized-variance probe over a threshold grid")
    _add_model_arguments(probe)
    probe.add_argument("--grid", required=True, help="comma list of increasing thresholds")
    probe.add_argument("--T", type=int, default=20_000, help="chain sweeps per threshold")
    probe.add_argument("--burnin", type=int, default=0)
    probe.add_argument("--seed", type=int, default=0)
    probe.add_argument("--out", help="output CSV (default <output_dir>/probe.csv)")

    oracle = sub.add_parser("oracle", help="ground-truth tail probability")
    _add_model_arguments(oracle)
    oracle.add_argument("--a", type=float, help="threshold")
    oracle.add_argument("--method", choices=["quadrature", "closed_form", "rejection"], default="quadrature")
    oracle.add_argument("--trials", type=int, default=1_000_000, help="proposals for --method rejection")
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--fixture", help="regenerate the oracle fixture file at this path")
    return parser


def _experiment_mapping(args: argparse.Namespace) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    if args.config:
        source = Path(args.config)
        try:
            data.update(json.loads(source.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read config file {source}: {exc}"]) from exc
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return data


def _cmd_run(args: argparse.Namespace) -> int:
    config = parse_config(_experiment_mapping(args))
    result = run_experiment(config, threads=args.threads)
    out = args.out or get_settings().output_dir
    for path in emit_csv(result, out):
        logger.info("wrote %s", path)
    if not result.reports:
        logger.error("every estimator failed: %s", result.errors)
        return EXIT_ALL_FAILED
    return EXIT_OK


def _cmd_probe(args: argparse.Namespace) -> int:
    try:
        d = make_step_distribution(args.dist or "pareto", beta=args.beta, shape=args.shape,
                                   scale=args.scale or 1.0)
        grid = [float(part) for part in args.grid.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    if args.count in (None, "none"):
        if args.n is None:
            raise ConfigError(["n is required without a count law"])
        points = normalized_variance_probe(d, grid, args.T, args.seed, n=args.n, burnin=args.burnin)
    else:
        count = make_count_distribution(args.count, rho=args.rho, lam=args.lam)
        points = normalized_variance_probe(d, grid, args.T, args.seed, count=count, burnin=args.burnin)
    path = emit_probe_csv(points, args.out or Path(get_settings().output_dir) / "probe.csv")
    logger.info("wrote %s", path)
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    if args.fixture:
        build_fixture(args.fixture)
        logger.info("wrote %s", args.fixture)
        return EXIT_OK
    if args.a is None:
        raise ConfigError(["a is required"])
    d = make_step_distribution(args.dist or "pareto", beta=args.beta, shape=args.shape,
                               scale=args.scale or 1.0)
    if args.method == "rejection":
        rng = np.random.default_rng(args.seed)
        if args.count in (None, "none"):
            result = rejection_estimate(d, args.a, rng, args.trials, n=args.n)
        else:
            count = make_count_distribution(args.count, rho=args.rho, lam=args.lam)
            result = rejection_estimate(d, args.a, rng, args.trials, count=count)
    elif args.n is None:
        raise ConfigError(["n is required for quadrature and closed_form"])
    elif args.method == "closed_form":
        result = tail_prob_closed_form(d, args.n, args.a)
    else:
        result = tail_prob_quadrature(d, args.n, args.a)
    print(result.model_dump_json())
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "probe": _cmd_probe, "oracle": _cmd_oracle}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleInfeasibleError as exc:
        print(f"oracle infeasible: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except RareMCMCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
