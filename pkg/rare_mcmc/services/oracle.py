"""
Ground truth at desk scale.

* Adaptive quadrature (QUADPACK via ``scipy.integrate.quad``) of the
  convolution recursion p_1(a) = sf(a), p_k(a) = sf(a) + int_0^a p_{k-1}(a - y) f(y) dy.
* A closed form of P(S_2 > a) for Pareto(beta = 2).
* Exact rejection sampling from the conditional laws given {S > a}.
* A plain-text fixture of committed oracle values,
  one record per line: ``model,params,a,value,error_bound,method``.
"""
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union
import csv
import logging
import math

import numpy as np
from scipy import integrate

from ..config import get_settings
from ..errors import DomainError, OracleInfeasibleError
from ..models import OracleResult
from .distributions import CountDistribution, Pareto, StepDistribution, max_tail_fixed, max_tail_random

logger = logging.getLogger(__name__)

MAX_QUADRATURE_DEPTH = 4
FIXTURE_HEADER = ["model", "params", "a", "value", "error_bound", "method"]


def tail_prob_quadrature(d: StepDistribution, n: int, a: float) -> OracleResult:
    """P(S_n > a) for n <= 4 by nested adaptive quadrature."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    if n > MAX_QUADRATURE_DEPTH:
        raise OracleInfeasibleError(f"quadrature supports n <= {MAX_QUADRATURE_DEPTH}, got {n}")
    if a <= 0.0:
        return OracleResult(value=1.0, abs_error_bound=0.0, method="quadrature")
    epsabs = 1e-10 * max(float(d.sf(a)), 1e-12)
    # largest reported quadrature error at each nesting depth; every level
    # integrates against a density, so the errors add up level by level
    worst = [0.0] * (n + 1)

    def tail(k: int, x: float) -> float:
        if x <= 0.0:
            return 1.0
        if k == 1:
            return float(d.sf(x))
        value, err = integrate.quad(
            lambda y: tail(k - 1, x - y) * float(d.pdf(y)),
            0.0, x, epsabs=epsabs, epsrel=1e-11, limit=500,
        )
        worst[k] = max(worst[k], err)
        return float(d.sf(x)) + value

    value = tail(n, float(a))
    return OracleResult(value=min(value, 1.0), abs_error_bound=sum(worst), method="quadrature")


def pareto2_two_step_tail(a: float) -> float:
    """Closed form of P(Y_1 + Y_2 > a) for Pareto(beta = 2)."""
    if a <= 0.0:
        return 1.0
    m = 1.0 + a
    b = 2.0 + a
    return (1.0 / m**2 + 12.0 * math.log(m) / b**4
            + 6.0 / b**3 * (1.0 - 1.0 / m) + (1.0 - 1.0 / m**2) / b**2)


def tail_prob_closed_form(d: StepDistribution, n: int, a: float) -> OracleResult:
    if n == 1:
        return OracleResult(value=float(d.sf(a)), abs_error_bound=0.0, method="closed_form")
    if n == 2 and isinstance(d, Pareto) and d.beta == 2.0:
        return OracleResult(value=pareto2_two_step_tail(a), abs_error_bound=1e-15, method="closed_form")
    raise OracleInfeasibleError(f"no closed form for n={n} and {d!r}")


def _check_feasible(p_lower: float, max_trials: Optional[float]) -> None:
    limit = max_trials if max_trials is not None else get_settings().max_oracle_trials
    if p_lower <= 0.0 or 1.0 / p_lower > limit:
        raise OracleInfeasibleError(
            f"rejection sampling needs about {1.0 / p_lower if p_lower > 0 else math.inf:.3g} "
            f"trials per sample (limit {limit:.3g})"
        )


def _propose(d: StepDistribution, rng: np.random.Generator, m: int, n: Optional[int],
             count: Optional[CountDistribution]) -> Tuple[List[np.ndarray], np.ndarray]:
    if count is None:
        steps = d.sample(rng, (m, n))
        return list(steps), steps.sum(axis=1)
    counts = count.sample(rng, m)
    flat = d.sample(rng, int(counts.sum()))
    rows = np.repeat(np.arange(m), counts)
    sums = np.bincount(rows, weights=flat, minlength=m)
    return np.split(flat, np.cumsum(counts)[:-1]), sums


def rejection_sample_conditional(
    d: StepDistribution,
    a: float,
    rng: np.random.Generator,
    size: int = 1,
    *,
    n: Optional[int] = None,
    count: Optional[CountDistribution] = None,
    max_trials: Optional[float] = None,
) -> Union[np.ndarray, List[np.ndarray]]:
    """
    Exact draws from the law of the steps given S > a.

    Returns a (size, n) array for a fixed number of steps, or a list of
    step vectors for a random count. Refuses when more than `max_trials`
    proposals per accepted draw would be expected.
    """
    if (n is None) == (count is None):
        raise DomainError("give exactly one of n or count")
    p_lower = max_tail_fixed(d, n, a) if count is None else max_tail_random(d, count, a)
    _check_feasible(p_lower, max_trials)
    accepted: List[np.ndarray] = []
    while len(accepted) < size:
        remaining = size - len(accepted)
        m = int(min(max(1024, math.ceil(1.2 * remaining / p_lower)), 1 << 20))
        rows, sums = _propose(d, rng, m, n, count)
        for i in np.flatnonzero(sums > a)[:remaining]:
            accepted.append(rows[i])
    if count is None:
        return np.vstack(accepted)
    return accepted


def rejection_estimate(
    d: StepDistribution,
    a: float,
    rng: np.random.Generator,
    trials: int,
    *,
    n: Optional[int] = None,
    count: Optional[CountDistribution] = None,
    max_trials: Optional[float] = None,
) -> OracleResult:
    """Acceptance rate of the rejection sampler, with a 3-sigma binomial bound."""
    if (n is None) == (count is None):
        raise DomainError("give exactly one of n or count")
    p_lower = max_tail_fixed(d, n, a) if count is None else max_tail_random(d, count, a)
    _check_feasible(p_lower, max_trials)
    hits = 0
    done = 0
    while done < trials:
        m = min(1 << 20, trials - done)
        _, sums = _propose(d, rng, m, n, count)
        hits += int(np.count_nonzero(sums > a))
        done += m
    rate = hits / trials
    return OracleResult(value=rate, abs_error_bound=3.0 * math.sqrt(rate * (1.0 - rate) / trials),
                        method="rejection")


def format_params(**params) -> str:
    return ";".join(f"{key}={value:g}" if isinstance(value, float) else f"{key}={value}"
                    for key, value in params.items())


def parse_params(text: str) -> Dict[str, float]:
    out = {}
    for item in filter(None, text.split(";")):
        key, _, value = item.partition("=")
        out[key] = float(value)
    return out


def load_fixture(path: Optional[str] = None) -> List[dict]:
    """Records of the oracle fixture file with numeric fields parsed."""
    path = Path(path or get_settings().oracle_fixture)
    records = []
    with path.open(newline="") as handle:
        for row in csv.DictReader(handle):
            records.append({
                "model": row["model"],
                "params": parse_params(row["params"]),
                "a": float(row["a"]),
                "value": float(row["value"]),
                "error_bound": float(row["error_bound"]),
                "method": row["method"],
            })
    return records


def fixture_value(records: List[dict], model: str, a: float, **params) -> dict:
    for record in records:
        if record["model"] == model and record["a"] == a and record["params"] == {k: float(v) for k, v in params.items()}:
            return record
    raise KeyError(f"no fixture record for {model} {params} a={a}")


FIXTURE_GRID = [
    (1, 2.0, 4.0), (1, 2.0, 25.0),
    (2, 2.0, 2.0), (2, 2.0, 4.0), (2, 2.0, 25.0),
]


def build_fixture(path: str) -> List[OracleResult]:
    """Compute the oracle grid and write it as the fixture file."""
    results = []
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(FIXTURE_HEADER)
        for n, beta, a in FIXTURE_GRID:
            d = Pareto(beta)
            try:
                result = tail_prob_closed_form(d, n, a)
            except OracleInfeasibleError:
                result = tail_prob_quadrature(d, n, a)
            logger.info("oracle n=%d beta=%g a=%g -> %.12e (%s)", n, beta, a, result.value, result.method)
            writer.writerow(["fixed", format_params(beta=beta, n=n), f"{a:g}",
                             f"{result.value:.12e}", f"{result.abs_error_bound:.3e}", result.method])
            results.append(result)
    return results
