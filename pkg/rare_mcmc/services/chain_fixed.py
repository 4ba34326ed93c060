"""
Gibbs sampler on A_n = {y : y_1 + ... + y_n > a}.

The invariant law is the conditional law of n i.i.d. steps given that their
sum exceeds a. One sweep updates every coordinate once, in a uniformly random
order, from its full conditional P(Y in . | Y + rest > a), then applies a
uniform random permutation of the coordinates.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union
import logging
import math

import numpy as np

from ..errors import DomainError
from .distributions import StepDistribution, sample_max_exceedance
from .streams import UniformStream

logger = logging.getLogger(__name__)

REFRESH_EVERY = 1024

RandomSource = Union[np.random.Generator, UniformStream]


@dataclass
class ChainStateFixed:
    steps: List[float]
    a: float
    sum: float = 0.0
    max: float = 0.0
    draws: int = 0
    sweeps: int = 0
    last_cost: int = 0
    n: int = field(init=False)

    def __post_init__(self):
        self.n = len(self.steps)
        self.refresh()

    def refresh(self) -> None:
        """Recompute the cached sum and max from the steps."""
        self.sum = math.fsum(self.steps)
        self.max = max(self.steps)


def _as_stream(rng: RandomSource, block: int) -> UniformStream:
    if isinstance(rng, UniformStream):
        return rng
    return UniformStream(rng, block=block)


def init_chain(d: StepDistribution, n: int, a: float, rng: np.random.Generator) -> ChainStateFixed:
    """Initial state drawn from P(Y in . | max Y_j > a), then permuted."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    steps = sample_max_exceedance(d, n, a, rng, 1)[0]
    steps = steps[rng.permutation(n)].tolist()
    return ChainStateFixed(steps=steps, a=float(a))


def update_coordinates(steps: List[float], total: float, a: float, d: StepDistribution,
                       stream: UniformStream) -> float:
    """
    Resample every coordinate of `steps` in place, in random order.

    Returns the new running total. Each coordinate j is drawn from
    Y | Y > a - (total - y_j); the new total always stays above a.
    """
    sample = d.sample_truncated
    for j in stream.permutation(len(steps)):
        rest = total - steps[j]
        y = sample(a - rest, stream.next())
        total = rest + y
        while total <= a:
            # rounding at the boundary of A_n
            y = math.nextafter(y, math.inf)
            total = rest + y
        steps[j] = y
    return total


def gibbs_sweep(state: ChainStateFixed, d: StepDistribution, rng: RandomSource) -> ChainStateFixed:
    """One full iteration: random-order coordinate updates, then a permutation."""
    stream = _as_stream(rng, block=3 * state.n)
    state.sum = update_coordinates(state.steps, state.sum, state.a, d, stream)
    stream.shuffle(state.steps)
    state.max = max(state.steps)
    state.last_cost = state.n
    state.draws += state.n
    state.sweeps += 1
    if state.sweeps % REFRESH_EVERY == 0:
        state.refresh()
    return state


def run_chain_fixed(
    d: StepDistribution,
    n: int,
    a: float,
    T: int,
    burnin: int,
    rng: np.random.Generator,
    observer: Callable[[ChainStateFixed], None],
    draw_budget: Optional[int] = None,
) -> ChainStateFixed:
    """
    Run `burnin` discarded sweeps, then T recorded sweeps, calling `observer`
    after each recorded one.

    With `draw_budget`, recording continues until that many coordinate draws
    have been made instead of for T sweeps.
    """
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T!r}")
    if burnin < 0:
        raise DomainError(f"burnin must be >= 0, got {burnin!r}")
    state = init_chain(d, n, a, rng)
    stream = UniformStream(rng)
    for _ in range(burnin):
        gibbs_sweep(state, d, stream)
    start = state.draws
    if draw_budget is None:
        for _ in range(T):
            gibbs_sweep(state, d, stream)
            observer(state)
    else:
        while state.draws - start < draw_budget:
            gibbs_sweep(state, d, stream)
            observer(state)
    return state
