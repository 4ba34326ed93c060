"""
Step-size and step-count laws.

Step laws are nonnegative and continuous with a strictly increasing cdf on
their support. Every law exposes its tail ``sf`` natively so that
probabilities far below machine epsilon stay representable; truncated
sampling is written in tail form, ``isf((1 - u) * sf(c))``, which equals
``ppf(F(c) + u * sf(c))`` but keeps full precision when F(c) is close to 1.

Sampling helpers take an explicit uniform variate or a caller-owned
``numpy.random.Generator``; nothing here touches a global RNG.
"""
from abc import ABC, abstractmethod
from typing import Tuple
import math

import numpy as np
from scipy import special, stats

from ..errors import DomainError, ThresholdUnreachableError


def _check_unit(u: float) -> None:
    if not 0.0 <= u < 1.0:
        raise DomainError(f"uniform variate must lie in [0, 1), got {u!r}")


class StepDistribution(ABC):
    """Nonnegative continuous step law: cdf, tail, density, quantile."""

    name: str = "step"

    @abstractmethod
    def cdf(self, x):
        ...

    @abstractmethod
    def sf(self, x):
        """Tail 1 - F(x), computed directly."""

    @abstractmethod
    def logpdf(self, x):
        ...

    @abstractmethod
    def ppf(self, u):
        """Vectorized quantile F^-1(u); no argument checks."""

    @abstractmethod
    def isf(self, q):
        """Vectorized tail quantile: x with sf(x) = q."""

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def quantile(self, u: float) -> float:
        _check_unit(u)
        return float(self.ppf(u))

    def sample_truncated(self, c: float, u: float) -> float:
        """Draw from P(Y in . | Y > c) by inversion; c <= 0 means unconditional."""
        _check_unit(u)
        if c <= 0.0:
            return float(self.ppf(u))
        tail = float(self.sf(c))
        if tail <= 0.0:
            raise ThresholdUnreachableError(f"P(Y > {c:g}) is 0 in floating point")
        return float(self.isf((1.0 - u) * tail))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.ppf(rng.random(size))

    def sample_above(self, a: float, rng: np.random.Generator, size) -> np.ndarray:
        """Vectorized draws from Y | Y > a."""
        if a <= 0.0:
            return self.sample(rng, size)
        tail = float(self.sf(a))
        if tail <= 0.0:
            raise ThresholdUnreachableError(f"P(Y > {a:g}) is 0 in floating point")
        return self.isf((1.0 - rng.random(size)) * tail)

    def sample_below(self, a: float, rng: np.random.Generator, size) -> np.ndarray:
        """Vectorized draws from Y | Y <= a."""
        mass = float(self.cdf(a))
        if mass <= 0.0:
            raise ThresholdUnreachableError(f"P(Y <= {a:g}) is 0")
        return self.ppf(rng.random(size) * mass)


class Pareto(StepDistribution):
    """
    Shifted Pareto (Lomax) law with tail index beta.

    f(x) = beta (x+1)^(-beta-1), sf(x) = (x+1)^(-beta), x >= 0.
    """

    name = "pareto"

    def __init__(self, beta: float):
        if beta is None or not beta > 0:
            raise DomainError(f"beta must be > 0, got {beta!r}")
        self.beta = float(beta)
        self._neg_inv_beta = -1.0 / self.beta

    def __repr__(self) -> str:
        return f"Pareto(beta={self.beta:g})"

    def cdf(self, x):
        x = np.maximum(x, 0.0)
        return -np.expm1(-self.beta * np.log1p(x))

    def sf(self, x):
        x = np.maximum(x, 0.0)
        return np.exp(-self.beta * np.log1p(x))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = math.log(self.beta) - (self.beta + 1.0) * np.log1p(np.maximum(x, 0.0))
        return np.where(x < 0.0, -np.inf, out)

    def ppf(self, u):
        return np.expm1(self._neg_inv_beta * np.log1p(-np.asarray(u, dtype=float)))

    def isf(self, q):
        return np.expm1(self._neg_inv_beta * np.log(q))

    def sample_truncated(self, c: float, u: float) -> float:
        # Closed form: (1 + c) (1 - u)^(-1/beta) - 1. Hot path of both chains.
        if not 0.0 <= u < 1.0:
            raise DomainError(f"uniform variate must lie in [0, 1), got {u!r}")
        if c <= 0.0:
            return math.expm1(self._neg_inv_beta * math.log1p(-u))
        x = (1.0 + c) * (1.0 - u) ** self._neg_inv_beta - 1.0
        if math.isinf(x):
            raise ThresholdUnreachableError(f"P(Y > {c:g}) is 0 in floating point")
        return x


class Weibull(StepDistribution):
    """Weibull law with shape k in (0, 1): subexponential, lighter than any Pareto."""

    name = "weibull"

    def __init__(self, shape: float, scale: float = 1.0):
        if shape is None or not 0.0 < shape < 1.0:
            raise DomainError(f"Weibull shape must lie in (0, 1), got {shape!r}")
        if not scale > 0:
            raise DomainError(f"Weibull scale must be > 0, got {scale!r}")
        self.shape = float(shape)
        self.scale = float(scale)

    def __repr__(self) -> str:
        return f"Weibull(shape={self.shape:g}, scale={self.scale:g})"

    def _z(self, x):
        return np.power(np.maximum(x, 0.0) / self.scale, self.shape)

    def cdf(self, x):
        return -np.expm1(-self._z(x))

    def sf(self, x):
        return np.exp(-self._z(x))

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        k, lam = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            out = math.log(k / lam) + (k - 1.0) * np.log(x / lam) - self._z(x)
        return np.where(x < 0.0, -np.inf, out)

    def ppf(self, u):
        return self.scale * np.power(-np.log1p(-np.asarray(u, dtype=float)), 1.0 / self.shape)

    def isf(self, q):
        return self.scale * np.power(-np.log(q), 1.0 / self.shape)

    def sample_truncated(self, c: float, u: float) -> float:
        # log-tail form: z(x) = z(c) - log(1 - u)
        _check_unit(u)
        if c <= 0.0:
            return float(self.ppf(u))
        z = (c / self.scale) ** self.shape - math.log1p(-u)
        return self.scale * z ** (1.0 / self.shape)


class CountDistribution(ABC):
    """Integer law of the number of steps."""

    name: str = "count"
    min_support: int = 1

    @abstractmethod
    def logpmf(self, k):
        ...

    @abstractmethod
    def sf_ge(self, k: int) -> float:
        """P(N >= k)."""

    @abstractmethod
    def pgf(self, t):
        """Generating function E[t^N], t in [0, 1]."""

    @abstractmethod
    def pgf_complement(self, eps: float) -> float:
        """1 - g(1 - eps), evaluated without cancellation."""

    @property
    @abstractmethod
    def mean(self) -> float:
        ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        ...

    @abstractmethod
    def sample_truncated(self, kstar: int, u: float) -> int:
        """Draw from N | N >= kstar by inversion of u."""

    @abstractmethod
    def upper_cutoff(self, tol: float = 1e-17) -> int:
        """Smallest K with P(N > K) below tol."""

    def pmf(self, k):
        return np.exp(self.logpmf(k))


class Geometric(CountDistribution):
    """P(N = k) = (1 - rho)^(k-1) rho, k = 1, 2, ..."""

    name = "geometric"
    min_support = 1

    def __init__(self, rho: float):
        if rho is None or not 0.0 < rho < 1.0:
            raise DomainError(f"rho must lie in (0, 1), got {rho!r}")
        self.rho = float(rho)
        self._log_q = math.log1p(-self.rho)

    def __repr__(self) -> str:
        return f"Geometric(rho={self.rho:g})"

    def logpmf(self, k):
        k = np.asarray(k, dtype=float)
        out = (k - 1.0) * self._log_q + math.log(self.rho)
        return np.where(k >= 1, out, -np.inf)

    def sf_ge(self, k: int) -> float:
        if k <= 1:
            return 1.0
        return math.exp((k - 1) * self._log_q)

    def pgf(self, t):
        t = np.asarray(t, dtype=float)
        return self.rho * t / (1.0 - (1.0 - self.rho) * t)

    def pgf_complement(self, eps: float) -> float:
        return eps / (self.rho + (1.0 - self.rho) * eps)

    @property
    def mean(self) -> float:
        return 1.0 / self.rho

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.geometric(self.rho, size)

    def sample_truncated(self, kstar: int, u: float) -> int:
        # memoryless: N | N >= k* is k* - 1 + Geometric(rho)
        _check_unit(u)
        if self.sf_ge(kstar) == 0.0:
            raise ThresholdUnreachableError(f"P(N >= {kstar}) is 0 in floating point")
        jump = max(1, math.ceil(math.log1p(-u) / self._log_q))
        return kstar - 1 + jump

    def upper_cutoff(self, tol: float = 1e-17) -> int:
        return int(math.ceil(math.log(tol) / self._log_q)) + 1


class Poisson(CountDistribution):
    """
    Poisson(lam) step count.

    The atom at 0 is kept: it never matters for events {S_N > a} with
    a >= 0, and keeping it makes the generating function the textbook one.
    """

    name = "poisson"
    min_support = 0

    def __init__(self, lam: float):
        if lam is None or not lam > 0:
            raise DomainError(f"lam must be > 0, got {lam!r}")
        self.lam = float(lam)
        self._log_lam = math.log(self.lam)

    def __repr__(self) -> str:
        return f"Poisson(lam={self.lam:g})"

    def logpmf(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(invalid="ignore"):
            out = k * self._log_lam - self.lam - special.gammaln(k + 1.0)
        return np.where(k >= 0, out, -np.inf)

    def sf_ge(self, k: int) -> float:
        if k <= 0:
            return 1.0
        return float(stats.poisson.sf(k - 1, self.lam))

    def pgf(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-self.lam * (1.0 - t))

    def pgf_complement(self, eps: float) -> float:
        return -math.expm1(-self.lam * eps)

    @property
    def mean(self) -> float:
        return self.lam

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.poisson(self.lam, size)

    def sample_truncated(self, kstar: int, u: float) -> int:
        # sequential inversion from k*, pmf recursion in log space
        _check_unit(u)
        kstar = max(kstar, 0)
        tail = self.sf_ge(kstar)
        if tail <= 0.0:
            raise ThresholdUnreachableError(f"P(N >= {kstar}) is 0 in floating point")
        target = u * tail
        k = kstar
        log_p = float(self.logpmf(k))
        acc = math.exp(log_p)
        while acc <= target:
            k += 1
            log_p += self._log_lam - math.log(k)
            term = math.exp(log_p)
            if term == 0.0 and k > self.lam:
                break
            acc += term
        return k

    def upper_cutoff(self, tol: float = 1e-17) -> int:
        return int(stats.poisson.isf(tol, self.lam)) + 1


class FixedCount(CountDistribution):
    """Degenerate law P(N = n) = 1."""

    name = "fixed"

    def __init__(self, n: int):
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n!r}")
        self.n = int(n)
        self.min_support = self.n

    def __repr__(self) -> str:
        return f"FixedCount(n={self.n})"

    def logpmf(self, k):
        k = np.asarray(k)
        return np.where(k == self.n, 0.0, -np.inf)

    def sf_ge(self, k: int) -> float:
        return 1.0 if k <= self.n else 0.0

    def pgf(self, t):
        return np.power(t, self.n)

    def pgf_complement(self, eps: float) -> float:
        return -math.expm1(self.n * math.log1p(-eps)) if eps < 1.0 else 1.0

    @property
    def mean(self) -> float:
        return float(self.n)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if size is None:
            return self.n
        return np.full(size, self.n, dtype=np.int64)

    def sample_truncated(self, kstar: int, u: float) -> int:
        _check_unit(u)
        if kstar > self.n:
            raise ThresholdUnreachableError(f"P(N >= {kstar}) is 0 for N = {self.n}")
        return self.n

    def upper_cutoff(self, tol: float = 1e-17) -> int:
        return self.n


def quantile(d: StepDistribution, u: float) -> float:
    return d.quantile(u)


def sample_truncated(d: StepDistribution, c: float, u: float) -> float:
    return d.sample_truncated(c, u)


def sample_count_truncated(c: CountDistribution, kstar: int, u: float) -> int:
    if kstar < 1:
        raise DomainError(f"kstar must be >= 1, got {kstar!r}")
    return c.sample_truncated(kstar, u)


def max_tail_fixed(d: StepDistribution, n: int, a: float) -> float:
    """P(max of n steps > a) = 1 - F(a)^n, from the tail without cancellation."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    tail = float(d.sf(a))
    if tail >= 1.0:
        return 1.0
    if n == 1:
        return tail
    return -math.expm1(n * math.log1p(-tail))


def max_tail_random(d: StepDistribution, c: CountDistribution, a: float) -> float:
    """P(max of N steps > a) = 1 - g_N(F(a))."""
    tail = float(d.sf(a))
    if tail >= 1.0:
        return 1.0 - float(c.pgf(0.0))
    return c.pgf_complement(tail)


def _first_exceedance_index(d: StepDistribution, n: int, a: float, u: np.ndarray) -> np.ndarray:
    """Inverse cdf of the first index j with Y_j > a, given max > a."""
    tail = float(d.sf(a))
    if tail >= 1.0:
        return np.ones(u.shape, dtype=np.int64)
    p_max = max_tail_fixed(d, n, a)
    if p_max <= 0.0:
        raise ThresholdUnreachableError(f"P(max > {a:g}) is 0 in floating point")
    j = np.ceil(np.log1p(-u * p_max) / math.log1p(-tail))
    return np.clip(j, 1, n).astype(np.int64)


def sample_max_exceedance(
    d: StepDistribution, n: int, a: float, rng: np.random.Generator, size: int = 1
) -> np.ndarray:
    """
    Exact draws from P((Y_1..Y_n) in . | max Y_j > a), shape (size, n).

    The first exceedance J has P(J = j) proportional to F(a)^(j-1) sf(a);
    coordinates before J follow Y | Y <= a, coordinate J follows Y | Y > a
    and the rest are unconditional.
    """
    j = _first_exceedance_index(d, n, a, rng.random(size))
    cols = np.arange(1, n + 1)
    out = d.sample(rng, (size, n))
    before = cols[None, :] < j[:, None]
    if before.any():
        out[before] = d.sample_below(a, rng, int(before.sum()))
    at = cols[None, :] == j[:, None]
    out[at] = d.sample_above(a, rng, size)
    return out


def count_max_exceedance_table(
    d: StepDistribution, c: CountDistribution, a: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Support and cumulative weights of N | max(Y_1..Y_N) > a.

    The weights are P(N = k) (1 - F(a)^k); the table is truncated where the
    count law's own tail falls below 1e-17.
    """
    tail = float(d.sf(a))
    ks = np.arange(max(c.min_support, 1), max(c.upper_cutoff(), 1) + 1)
    if tail >= 1.0:
        weights = c.pmf(ks)
    else:
        weights = c.pmf(ks) * -np.expm1(ks * math.log1p(-tail))
    cumulative = np.cumsum(weights)
    if cumulative[-1] <= 0.0:
        raise ThresholdUnreachableError(f"P(max > {a:g}) is 0 in floating point")
    return ks, cumulative


def sample_count_max_exceedance(
    d: StepDistribution, c: CountDistribution, a: float, rng: np.random.Generator, size: int
) -> np.ndarray:
    ks, cumulative = count_max_exceedance_table(d, c, a)
    idx = np.searchsorted(cumulative, rng.random(size) * cumulative[-1], side="right")
    return ks[np.minimum(idx, len(ks) - 1)]


def make_step_distribution(dist: str, beta: float = None, shape: float = None, scale: float = 1.0) -> StepDistribution:
    if dist == "pareto":
        return Pareto(beta)
    if dist == "weibull":
        return Weibull(shape, scale)
    raise DomainError(f"unknown step distribution {dist!r}")


def make_count_distribution(count: str, rho: float = None, lam: float = None) -> CountDistribution:
    if count == "geometric":
        return Geometric(rho)
    if count == "poisson":
        return Poisson(lam)
    raise DomainError(f"unknown count distribution {count!r}")
