"""
Random streams for batched runs.

Every batch of every estimator gets its own PCG64 generator seeded by
``SeedSequence(seed, spawn_key=(estimator_index, batch_index))``. The stream
a batch sees depends only on those three integers, so results do not change
with the number of workers or with the order batches finish in.
"""
import numpy as np
from typing import List

ESTIMATOR_STREAMS = {"mcmc": 0, "is": 1, "mc": 2}

DEFAULT_BLOCK = 4096


def batch_seed_sequence(seed: int, estimator: str, batch: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(ESTIMATOR_STREAMS[estimator], batch))


def batch_rng(seed: int, estimator: str, batch: int) -> np.random.Generator:
    """Generator for one (estimator, batch) pair."""
    return np.random.Generator(np.random.PCG64(batch_seed_sequence(seed, estimator, batch)))


def independent_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """`count` independent generators split off one master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


class UniformStream:
    """
    Buffered U[0,1) variates drawn from a caller-owned Generator.

    The chain loops consume one variate at a time; drawing them in blocks
    keeps the per-variate cost close to a list pop.
    """

    __slots__ = ("rng", "block", "_buffer", "_pos")

    def __init__(self, rng: np.random.Generator, block: int = DEFAULT_BLOCK):
        self.rng = rng
        self.block = block
        self._buffer: List[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buffer):
            self._buffer = self.rng.random(self.block).tolist()
            self._pos = 0
        u = self._buffer[self._pos]
        self._pos += 1
        return u

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = int(self.next() * (i + 1))
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> List[int]:
        order = list(range(n))
        self.shuffle(order)
        return order
