"""
Experiment declaration, batched comparison runs and CSV output.

In the random-count model the per-batch draw budgets of the estimators
intentionally differ: MCMC stops at ceil(T E[N]) draws while MC and IS
sample T walks at N + 1 draws each, so `draws_per_batch` is not equal
across estimators there.
"""
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union
import argparse
import csv
import json
import logging

from pydantic import ValidationError

from ..config import resolve_threads
from ..errors import ConfigError
from ..models import ExperimentConfig, ExperimentResult, ProbePoint, TraceRow
from .distributions import max_tail_fixed, max_tail_random
from .estimators import build_model, collect_batches, summarize_batches

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ["estimator", "avg_est", "std_dev", "avg_time_s", "p_max", "hit_rate", "b", "T"]
PARAM_COLUMNS = ["model", "dist", "beta", "shape", "count", "rho", "lam", "a", "n",
                 "threshold", "burnin", "seed", "is_weight", "label"]
TRACE_HEADER = ["step", "estimate", "estimator"]


def _fixed_row(n: int, a: float, batches: int, estimators: str) -> Dict[str, Any]:
    return {"model": "fixed", "dist": "pareto", "beta": 2.0, "n": n, "a": a,
            "T": 100_000, "batches": batches, "estimators": estimators}


def _geometric_row(rho: float, a: float, T: int, batches: int, estimators: str) -> Dict[str, Any]:
    return {"model": "random", "dist": "pareto", "beta": 1.0, "count": "geometric", "rho": rho,
            "a": a, "T": T, "batches": batches, "estimators": estimators}


# Benchmark grid: heavy-tailed sums with a_n = a n (fixed) and a / rho (geometric).
# Standard MC is left out where p is too small for it to see a single hit.
PRESETS: Dict[str, Dict[str, Any]] = {
    "fixed-n5-a5": _fixed_row(5, 5.0, 25, "mcmc,is,mc"),
    "fixed-n5-a20": _fixed_row(5, 20.0, 25, "mcmc,is,mc"),
    "fixed-n5-a1e3": _fixed_row(5, 1e3, 20, "mcmc,is"),
    "fixed-n5-a1e4": _fixed_row(5, 1e4, 20, "mcmc,is"),
    "fixed-n20-a20": _fixed_row(20, 20.0, 25, "mcmc,is,mc"),
    "fixed-n20-a200": _fixed_row(20, 200.0, 25, "mcmc,is,mc"),
    "fixed-n20-a1e3": _fixed_row(20, 1e3, 20, "mcmc,is"),
    "fixed-n20-a1e4": _fixed_row(20, 1e4, 20, "mcmc,is"),
    "geom-rho0.2-a1e2": _geometric_row(0.2, 1e2, 100_000, 25, "mcmc,is,mc"),
    "geom-rho0.2-a1e3": _geometric_row(0.2, 1e3, 100_000, 25, "mcmc,is,mc"),
    "geom-rho0.2-a5e7": _geometric_row(0.2, 5e7, 1_000_000, 20, "mcmc,is"),
    "geom-rho0.2-a5e9": _geometric_row(0.2, 5e9, 1_000_000, 20, "mcmc,is"),
    "geom-rho0.05-a1e3": _geometric_row(0.05, 1e3, 100_000, 25, "mcmc,is,mc"),
    "geom-rho0.05-a5e5": _geometric_row(0.05, 5e5, 100_000, 25, "mcmc,is,mc"),
    "convergence-n5-a10": {**_fixed_row(5, 10.0, 2, "mcmc,is"), "T": 20_000, "trace_every": 1000},
}


def _format_error(error: Mapping[str, Any]) -> str:
    message = error["msg"]
    if message.startswith("Value error, "):
        message = message[len("Value error, "):]
    loc = ".".join(str(part) for part in error.get("loc", ()))
    if error["type"] == "extra_forbidden":
        return f"unknown key: {loc}"
    if error["type"] == "missing":
        return f"{loc} is required"
    return f"{loc}: {message}" if loc else message


def parse_config(source: Union[Mapping[str, Any], argparse.Namespace, str, Path]) -> ExperimentConfig:
    """
    Validate an experiment description from a mapping, parsed CLI arguments
    or a JSON file. Raises ConfigError listing every violated constraint.
    """
    if isinstance(source, argparse.Namespace):
        data = {key: value for key, value in vars(source).items() if value is not None}
    elif isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"cannot read config file {source}: {exc}"]) from exc
    else:
        data = dict(source)
    preset = data.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError([f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}"])
        data = {**PRESETS[preset], **data}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(error) for error in exc.errors()) from exc


def p_max_for(config: ExperimentConfig) -> float:
    d, n, count = build_model(config)
    if count is None:
        return max_tail_fixed(d, n, config.threshold)
    return max_tail_random(d, count, config.threshold)


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    """
    Run every requested estimator with matched draw budgets. A failing
    estimator is reported in `errors` and does not stop the others.
    """
    workers = resolve_threads(threads or config.threads)
    result = ExperimentResult(config=config, threshold=config.threshold, p_max=p_max_for(config))
    logger.info("experiment %s: threshold %.6g, p_max %.6e, %d batches x T=%d on %d worker(s)",
                config.label or config.model, result.threshold, result.p_max,
                config.batches, config.T, workers)
    for estimator in config.estimators:
        try:
            outcomes = collect_batches(config, estimator, workers)
        except Exception as exc:
            logger.error("estimator %s failed: %s", estimator, exc)
            result.errors[estimator] = f"{type(exc).__name__}: {exc}"
            continue
        report = summarize_batches(estimator, config, outcomes)
        result.reports[estimator] = report
        result.trace.extend(TraceRow(step=step, estimate=estimate, estimator=estimator)
                            for step, estimate in outcomes[0].trace)
        logger.info("%s: avg %.6e, std %.3e, hit rate %.4f, %.1fs/batch",
                    estimator, report.avg_est, report.std_dev, report.hit_rate, report.avg_runtime_s)
    return result


def format_number(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.5e}"
    return str(value)


def _param_values(result: ExperimentResult) -> List[str]:
    config = result.config
    values = {**config.model_dump(), "threshold": result.threshold}
    return [format_number(values.get(column)) for column in PARAM_COLUMNS]


def emit_csv(result: ExperimentResult, out_dir: Union[str, Path]) -> List[Path]:
    """Write summary.csv and, when tracing, trace.csv; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_path = out / "summary.csv"
    params = _param_values(result)
    with summary_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER + PARAM_COLUMNS)
        for estimator, report in result.reports.items():
            writer.writerow([
                estimator,
                format_number(report.avg_est),
                format_number(report.std_dev),
                format_number(report.avg_runtime_s),
                format_number(result.p_max),
                format_number(report.hit_rate),
                format_number(report.batches),
                format_number(report.T),
            ] + params)
    written = [summary_path]
    if result.config.trace_every:
        trace_path = out / "trace.csv"
        with trace_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            for row in result.trace:
                writer.writerow([format_number(row.step), format_number(row.estimate), row.estimator])
        written.append(trace_path)
    return written


def emit_probe_csv(points: List[ProbePoint], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["a", "value", "hit_rate"])
        for point in points:
            writer.writerow([format_number(point.a), format_number(point.value), format_number(point.hit_rate)])
    return path
