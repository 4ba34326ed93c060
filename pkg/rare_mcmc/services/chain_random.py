"""
Gibbs sampler for the random-sum event {Y_1 + ... + Y_N > a}.

Each sweep first redraws the number of steps from P(N = k | N >= k*), where
k* is the first-passage index of the current state, then runs the fixed-n
coordinate sweep over the (possibly extended or shortened) step vector.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional
import logging
import math

import numpy as np

from ..errors import ContractViolationError, DomainError
from .chain_fixed import REFRESH_EVERY, RandomSource, _as_stream, update_coordinates
from .distributions import CountDistribution, StepDistribution, sample_max_exceedance
from .streams import UniformStream

logger = logging.getLogger(__name__)


def compute_kstar(steps: List[float], a: float) -> int:
    """Smallest j (1-based) with y_1 + ... + y_j > a."""
    partial = 0.0
    for j, y in enumerate(steps, start=1):
        partial += y
        if partial > a:
            return j
    raise ContractViolationError(f"steps sum to {partial!r}, not above {a!r}")


@dataclass
class ChainStateRandom:
    steps: List[float]
    a: float
    sum: float = 0.0
    max: float = 0.0
    kstar: int = 1
    draws: int = 0
    sweeps: int = 0
    last_cost: int = 0

    def __post_init__(self):
        self.refresh()

    @property
    def count(self) -> int:
        return len(self.steps)

    def refresh(self) -> None:
        """
        Recompute cached sum, max and k* from the steps.

        k* is also recomputed after every sweep, so only the sum carries
        drift between refreshes.
        """
        self.kstar = compute_kstar(self.steps, self.a)
        self.sum = math.fsum(self.steps)
        self.max = max(self.steps)


def init_chain_random(d: StepDistribution, c: CountDistribution, a: float,
                      rng: np.random.Generator) -> ChainStateRandom:
    """N_0 from the count law (at least one step), steps as in the fixed chain."""
    count = int(c.sample(rng, None))
    while count < 1:
        count = int(c.sample(rng, None))
    steps = sample_max_exceedance(d, count, a, rng, 1)[0]
    steps = steps[rng.permutation(count)].tolist()
    return ChainStateRandom(steps=steps, a=float(a))


def resample_count(state: ChainStateRandom, c: CountDistribution, d: StepDistribution,
                   rng: RandomSource) -> ChainStateRandom:
    """
    Draw N_{t+1} >= k* and resize the step vector: fresh F draws are appended,
    or the first N_{t+1} steps are kept. The sum stays above a because k* steps
    already exceed it.
    """
    stream = _as_stream(rng, block=8)
    new_count = c.sample_truncated(state.kstar, stream.next())
    steps = state.steps
    if new_count > len(steps):
        for _ in range(new_count - len(steps)):
            steps.append(d.sample_truncated(0.0, stream.next()))
        state.sum = math.fsum(steps)
    elif new_count < len(steps):
        del steps[new_count:]
        state.sum = math.fsum(steps)
    return state


def gibbs_sweep_random(state: ChainStateRandom, d: StepDistribution, c: CountDistribution,
                       rng: RandomSource) -> ChainStateRandom:
    stream = _as_stream(rng, block=64)
    resample_count(state, c, d, stream)
    state.sum = update_coordinates(state.steps, state.sum, state.a, d, stream)
    stream.shuffle(state.steps)
    state.max = max(state.steps)
    state.kstar = compute_kstar(state.steps, state.a)
    state.last_cost = state.count + 1
    state.draws += state.last_cost
    state.sweeps += 1
    if state.sweeps % REFRESH_EVERY == 0:
        state.refresh()
    return state


def run_chain_random(
    d: StepDistribution,
    c: CountDistribution,
    a: float,
    T: int,
    burnin: int,
    rng: np.random.Generator,
    observer: Callable[[ChainStateRandom], None],
    draw_budget: Optional[int] = None,
) -> ChainStateRandom:
    """As run_chain_fixed; with `draw_budget`, a sweep costs N_{t+1} + 1 draws."""
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T!r}")
    if burnin < 0:
        raise DomainError(f"burnin must be >= 0, got {burnin!r}")
    state = init_chain_random(d, c, a, rng)
    stream = UniformStream(rng)
    for _ in range(burnin):
        gibbs_sweep_random(state, d, c, stream)
    start = state.draws
    if draw_budget is None:
        for _ in range(T):
            gibbs_sweep_random(state, d, c, stream)
            observer(state)
    else:
        while state.draws - start < draw_budget:
            gibbs_sweep_random(state, d, c, stream)
            observer(state)
    return state
