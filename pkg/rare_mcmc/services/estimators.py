"""
Estimators of P(S > a) and their batched evaluation.

The MCMC estimator runs a Gibbs chain on {S > a} and estimates the
reciprocal probability 1/p by

    q_hat = (1 / P(M > a)) * (fraction of chain states whose largest step exceeds a),

reporting p_hat = min(1 / q_hat, 1). Standard Monte Carlo and a defensive
mixture importance sampler (w * F + (1 - w) * P(. | M > a)) are the baselines.
Every batch owns one random stream (see ``streams``); batches can run in a
process pool and are always merged in batch-index order.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union
import logging
import math
import time

import numpy as np

from ..errors import DegenerateModelError, DomainError
from ..models import BatchReport, ExperimentConfig, ProbePoint
from .chain_fixed import ChainStateFixed, run_chain_fixed
from .chain_random import ChainStateRandom, run_chain_random
from .distributions import (
    CountDistribution,
    StepDistribution,
    make_count_distribution,
    make_step_distribution,
    max_tail_fixed,
    max_tail_random,
    sample_count_max_exceedance,
    sample_max_exceedance,
)
from .streams import batch_rng, independent_rngs

logger = logging.getLogger(__name__)

CHUNK = 1 << 16

TracePoints = List[Tuple[int, float]]


@dataclass
class EstimatorAccumulator:
    """Chain observer counting states whose largest step exceeds a."""

    a: float
    norm_const: float
    hits: int = 0
    total: int = 0
    trace_every: int = 0
    steps: int = 0
    trace: TracePoints = field(default_factory=list)
    _next_mark: int = 0

    def __post_init__(self):
        self._next_mark = self.trace_every

    def __call__(self, state: Union[ChainStateFixed, ChainStateRandom]) -> None:
        self.total += 1
        if state.max > self.a:
            self.hits += 1
        if self.trace_every:
            self.steps += state.last_cost
            while self.steps >= self._next_mark:
                self.trace.append((self._next_mark, clamp_probability_estimate(mcmc_reciprocal_estimate(self))))
                self._next_mark += self.trace_every

    @property
    def hit_rate(self) -> float:
        return self.hits / self.total if self.total else 0.0


@dataclass
class RunningStats:
    """Welford running mean and variance."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(max(self.m2, 0.0) / (self.count - 1))


@dataclass
class BatchOutcome:
    estimate: float
    hits: int
    observations: int
    draws: int
    runtime_s: float = 0.0
    trace: TracePoints = field(default_factory=list)


def mcmc_reciprocal_estimate(acc: EstimatorAccumulator) -> float:
    """q_hat = (hits / total) / P(M > a), an estimate of 1/p."""
    if acc.total < 1:
        raise DomainError("no chain states observed")
    if not acc.norm_const > 0.0:
        raise DegenerateModelError("P(M > a) is 0; the estimator is undefined")
    if acc.norm_const > 1.0:
        raise DomainError(f"normalizing constant {acc.norm_const!r} exceeds 1")
    return (acc.hits / acc.total) / acc.norm_const


def clamp_probability_estimate(qhat: float) -> float:
    """min(1/q_hat, 1), with q_hat = 0 mapped to 1."""
    if qhat < 0:
        raise DomainError(f"q_hat must be >= 0, got {qhat!r}")
    if qhat == 0.0:
        return 1.0
    return min(1.0 / qhat, 1.0)


def _norm_const(d: StepDistribution, a: float, n: Optional[int], count: Optional[CountDistribution]) -> float:
    if count is None:
        return max_tail_fixed(d, n, a)
    return max_tail_random(d, count, a)


def mcmc_estimate(d: StepDistribution, a: float, T: int, rng: np.random.Generator, *,
                  n: Optional[int] = None, count: Optional[CountDistribution] = None,
                  burnin: int = 0, trace_every: int = 0) -> BatchOutcome:
    """
    One MCMC batch with a budget of T walks' worth of draws: T*n coordinate
    draws for the fixed model, ceil(T*E[N]) for the random one.
    """
    acc = EstimatorAccumulator(a=a, norm_const=_norm_const(d, a, n, count), trace_every=trace_every)
    if count is None:
        budget = T * n
        run_chain_fixed(d, n, a, T, burnin, rng, acc, draw_budget=budget)
    else:
        budget = math.ceil(T * count.mean)
        run_chain_random(d, count, a, T, burnin, rng, acc, draw_budget=budget)
    estimate = clamp_probability_estimate(mcmc_reciprocal_estimate(acc))
    return BatchOutcome(estimate=estimate, hits=acc.hits, observations=acc.total,
                        draws=budget, trace=acc.trace)


def _random_walks(d: StepDistribution, counts: np.ndarray, rng: np.random.Generator,
                  conditional_a: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Sum and max of walks with the given step counts, grouped by count."""
    sums = np.zeros(len(counts))
    maxes = np.zeros(len(counts))
    for k in np.unique(counts):
        if k == 0:
            continue
        rows = np.flatnonzero(counts == k)
        if conditional_a is None:
            steps = d.sample(rng, (len(rows), int(k)))
        else:
            steps = sample_max_exceedance(d, int(k), conditional_a, rng, len(rows))
        sums[rows] = steps.sum(axis=1)
        maxes[rows] = steps.max(axis=1)
    return sums, maxes


class _ChunkTrace:
    """Running estimate of a mean of per-walk contributions, sampled every `every` draws."""

    def __init__(self, every: int):
        self.every = every
        self.points: TracePoints = []
        self._steps = 0
        self._sum = 0.0
        self._walks = 0
        self._next_mark = every

    def add(self, contributions: np.ndarray, costs: np.ndarray) -> None:
        if not self.every:
            return
        cum_steps = self._steps + np.cumsum(costs)
        cum_sum = self._sum + np.cumsum(contributions)
        end = int(cum_steps[-1])
        if end >= self._next_mark:
            marks = np.arange(self._next_mark, end + 1, self.every)
            idx = np.searchsorted(cum_steps, marks, side="left")
            for mark, i in zip(marks.tolist(), idx.tolist()):
                self.points.append((mark, float(cum_sum[i] / (self._walks + i + 1))))
            self._next_mark = int(marks[-1]) + self.every
        self._steps = end
        self._sum = float(cum_sum[-1])
        self._walks += len(costs)


def standard_mc_estimate(d: StepDistribution, a: float, T: int, rng: np.random.Generator, *,
                         n: Optional[int] = None, count: Optional[CountDistribution] = None,
                         trace_every: int = 0) -> BatchOutcome:
    """Mean of T i.i.d. indicators I{S > a}."""
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T!r}")
    hits = 0
    draws = 0
    trace = _ChunkTrace(trace_every)
    done = 0
    while done < T:
        m = min(CHUNK, T - done)
        if count is None:
            sums = d.sample(rng, (m, n)).sum(axis=1)
            costs = np.full(m, n)
        else:
            counts = count.sample(rng, m)
            sums, _ = _random_walks(d, counts, rng)
            costs = counts + 1
        indicator = (sums > a).astype(float)
        hits += int(indicator.sum())
        draws += int(costs.sum())
        trace.add(indicator, costs)
        done += m
    return BatchOutcome(estimate=hits / T, hits=hits, observations=T, draws=draws, trace=trace.points)


def mixture_is_estimate(d: StepDistribution, a: float, w: float, T: int, rng: np.random.Generator, *,
                        n: Optional[int] = None, count: Optional[CountDistribution] = None,
                        trace_every: int = 0) -> BatchOutcome:
    """
    Defensive-mixture importance sampling.

    Walks come from w * F with probability w and from P(. | M > a) otherwise;
    the likelihood ratio is 1 / (w + (1 - w) I{M > a} / P(M > a)).
    """
    if not 0.0 < w <= 1.0:
        raise DomainError(f"mixture weight must lie in (0, 1], got {w!r}")
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T!r}")
    p_max = _norm_const(d, a, n, count)
    if not p_max > 0.0:
        raise DegenerateModelError("P(M > a) is 0; no conditional component to sample")
    total = 0.0
    hits = 0
    draws = 0
    trace = _ChunkTrace(trace_every)
    done = 0
    while done < T:
        m = min(CHUNK, T - done)
        plain = rng.random(m) < w
        n_cond = int(m - plain.sum())
        if count is None:
            steps = d.sample(rng, (m, n))
            if n_cond:
                steps[~plain] = sample_max_exceedance(d, n, a, rng, n_cond)
            sums, maxes = steps.sum(axis=1), steps.max(axis=1)
            costs = np.full(m, n)
        else:
            counts = count.sample(rng, m)
            if n_cond:
                counts[~plain] = sample_count_max_exceedance(d, count, a, rng, n_cond)
            sums = np.empty(m)
            maxes = np.empty(m)
            sums[plain], maxes[plain] = _random_walks(d, counts[plain], rng)
            if n_cond:
                sums[~plain], maxes[~plain] = _random_walks(d, counts[~plain], rng, conditional_a=a)
            costs = counts + 1
        weights = 1.0 / (w + (1.0 - w) * (maxes > a) / p_max)
        event = sums > a
        contributions = np.where(event, weights, 0.0)
        total += math.fsum(contributions)
        hits += int(event.sum())
        draws += int(costs.sum())
        trace.add(contributions, costs)
        done += m
    return BatchOutcome(estimate=total / T, hits=hits, observations=T, draws=draws, trace=trace.points)


def build_model(config: ExperimentConfig) -> Tuple[StepDistribution, Optional[int], Optional[CountDistribution]]:
    d = make_step_distribution(config.dist, beta=config.beta, shape=config.shape, scale=config.scale)
    if config.model == "fixed":
        return d, config.n, None
    return d, None, make_count_distribution(config.count, rho=config.rho, lam=config.lam)


def run_single_batch(config: ExperimentConfig, estimator: str, batch: int) -> BatchOutcome:
    """One batch of one estimator on its own stream; process-pool entry point."""
    d, n, count = build_model(config)
    rng = batch_rng(config.seed, estimator, batch)
    trace_every = config.trace_every if batch == 0 else 0
    a = config.threshold
    started = time.perf_counter()
    if estimator == "mcmc":
        outcome = mcmc_estimate(d, a, config.T, rng, n=n, count=count,
                                burnin=config.burnin, trace_every=trace_every)
    elif estimator == "mc":
        outcome = standard_mc_estimate(d, a, config.T, rng, n=n, count=count, trace_every=trace_every)
    elif estimator == "is":
        outcome = mixture_is_estimate(d, a, config.is_weight, config.T, rng, n=n, count=count,
                                      trace_every=trace_every)
    else:
        raise DomainError(f"unknown estimator {estimator!r}")
    outcome.runtime_s = time.perf_counter() - started if config.timing else 0.0
    logger.debug("%s batch %d: estimate %.6e in %.1fs", estimator, batch, outcome.estimate, outcome.runtime_s)
    return outcome


def collect_batches(config: ExperimentConfig, estimator: str, threads: int = 1) -> List[BatchOutcome]:
    """Run every batch of `estimator`; the returned list is in batch order."""
    indices = range(config.batches)
    if threads <= 1:
        return [run_single_batch(config, estimator, b) for b in indices]
    with ProcessPoolExecutor(max_workers=min(threads, config.batches)) as executor:
        return list(executor.map(run_single_batch, [config] * config.batches,
                                 [estimator] * config.batches, indices))


def summarize_batches(estimator: str, config: ExperimentConfig, outcomes: Sequence[BatchOutcome]) -> BatchReport:
    stats = RunningStats()
    for outcome in outcomes:
        stats.push(outcome.estimate)
    means = [o.estimate for o in outcomes]
    observations = sum(o.observations for o in outcomes)
    return BatchReport(
        estimator=estimator,
        batch_means=means,
        avg_est=math.fsum(means) / len(means),
        std_dev=stats.std,
        avg_runtime_s=round(math.fsum(o.runtime_s for o in outcomes) / len(outcomes), 1),
        hit_rate=sum(o.hits for o in outcomes) / observations if observations else 0.0,
        batches=len(outcomes),
        T=config.T,
        draws_per_batch=round(sum(o.draws for o in outcomes) / len(outcomes)),
    )


def batch_run(config: ExperimentConfig, estimator: str = "mcmc", seed: Optional[int] = None,
              threads: int = 1) -> BatchReport:
    """b independent batches of one estimator, aggregated into a BatchReport."""
    if config.batches < 2:
        raise DomainError("batches must be ≥ 2")
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    return summarize_batches(estimator, config, collect_batches(config, estimator, threads))


def normalized_variance_probe(d: StepDistribution, a_grid: Sequence[float], T: int, seed: int = 0, *,
                              n: Optional[int] = None, count: Optional[CountDistribution] = None,
                              burnin: int = 0) -> List[ProbePoint]:
    """
    v(a) = 1 / hit_rate - 1 along an increasing grid of thresholds.

    hit_rate estimates P(M > a | S > a), so v(a) estimates
    (P(S > a) / P(M > a)) (1 - P(M > a) / P(S > a)), the normalized variance
    of one observation of the estimator; it tends to 0 for subexponential steps.
    """
    grid = [float(a) for a in a_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("threshold grid must be strictly increasing")
    points = []
    for a, rng in zip(grid, independent_rngs(seed, len(grid))):
        acc = EstimatorAccumulator(a=a, norm_const=_norm_const(d, a, n, count))
        if count is None:
            run_chain_fixed(d, n, a, T, burnin, rng, acc)
        else:
            run_chain_random(d, count, a, T, burnin, rng, acc)
        rate = acc.hit_rate
        points.append(ProbePoint(a=a, value=(1.0 / rate - 1.0) if rate > 0 else None, hit_rate=rate))
    return points
