import math

import numpy as np
import pytest
from scipy import integrate, stats

from rare_mcmc.errors import DomainError, ThresholdUnreachableError
from rare_mcmc.services.distributions import (
    FixedCount,
    Geometric,
    Pareto,
    Poisson,
    Weibull,
    count_max_exceedance_table,
    make_count_distribution,
    make_step_distribution,
    max_tail_fixed,
    max_tail_random,
    quantile,
    sample_count_max_exceedance,
    sample_count_truncated,
    sample_max_exceedance,
    sample_truncated,
)

LAW_SAMPLES = 100_000


def test_pareto_quantile_and_tail(pareto2):
    assert quantile(pareto2, 0.75) == pytest.approx(1.0, rel=1e-14)
    assert quantile(pareto2, 0.0) == 0.0
    assert float(pareto2.sf(4.0)) == pytest.approx(0.04, rel=1e-14)
    assert float(pareto2.cdf(4.0)) == pytest.approx(0.96, rel=1e-14)


def test_pareto_beta_one_quantile():
    assert quantile(Pareto(1.0), 0.5) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 3.5])
def test_quantile_round_trip(beta, rng):
    d = Pareto(beta)
    u = rng.random(10_000)
    x = np.array([quantile(d, v) for v in u])
    assert np.abs(d.cdf(x) - u).max() <= 1e-10


@pytest.mark.parametrize("d", [Pareto(1.0), Pareto(2.0), Pareto(3.5), Weibull(0.5), Weibull(0.7, scale=2.0)],
                         ids=repr)
def test_density_integrates_to_one(d):
    density = lambda x: float(d.pdf(x))
    head, _ = integrate.quad(density, 0.0, 1.0)
    tail, _ = integrate.quad(density, 1.0, np.inf)
    assert head + tail == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("u", [1.0, -0.1, 1.5])
def test_quantile_rejects_u_outside_unit_interval(pareto2, u):
    with pytest.raises(DomainError):
        quantile(pareto2, u)


@pytest.mark.parametrize("beta", [0.0, -1.0, None])
def test_pareto_rejects_nonpositive_beta(beta):
    with pytest.raises(DomainError):
        Pareto(beta)


def test_truncated_sample_closed_form(pareto2):
    # (1 + c)(1 - u)^(-1/2) - 1
    assert sample_truncated(pareto2, 3.0, 0.75) == pytest.approx(7.0, rel=1e-14)
    assert sample_truncated(pareto2, 3.0, 0.0) == pytest.approx(3.0, rel=1e-14)


def test_truncated_sample_nonpositive_threshold_is_unconditional(pareto2):
    assert sample_truncated(pareto2, -2.0, 0.75) == quantile(pareto2, 0.75)
    assert sample_truncated(pareto2, 0.0, 0.3) == quantile(pareto2, 0.3)


def test_truncated_sample_deep_tail_stays_above_threshold(pareto2):
    for u in (0.0, 1e-12, 0.5, 0.999999):
        assert sample_truncated(pareto2, 1e10, u) >= 1e10


def test_truncated_sample_unreachable_threshold(pareto2):
    with pytest.raises(ThresholdUnreachableError):
        sample_truncated(pareto2, 1e308, 0.9)


def test_generic_tail_form_matches_closed_form(pareto2):
    generic = super(Pareto, pareto2).sample_truncated
    for c, u in [(0.5, 0.1), (3.0, 0.75), (1e4, 0.42)]:
        assert generic(c, u) == pytest.approx(pareto2.sample_truncated(c, u), rel=1e-10)


def test_weibull_tail_and_truncation():
    d = Weibull(0.5, scale=2.0)
    assert float(d.sf(8.0)) == pytest.approx(math.exp(-2.0), rel=1e-14)
    assert float(d.cdf(d.ppf(0.3))) == pytest.approx(0.3, rel=1e-12)
    x = d.sample_truncated(8.0, 0.5)
    assert x > 8.0
    # P(Y > x | Y > 8) = 1 - u
    assert float(d.sf(x) / d.sf(8.0)) == pytest.approx(0.5, rel=1e-10)
    assert d.sample_truncated(1e6, 0.5) > 1e6


@pytest.mark.parametrize("shape", [0.0, 1.0, 1.5])
def test_weibull_rejects_shape_outside_unit_interval(shape):
    with pytest.raises(DomainError):
        Weibull(shape)


def test_truncated_sampler_law(pareto2, rng):
    c = 3.0
    draws = np.array([sample_truncated(pareto2, c, u) for u in rng.random(LAW_SAMPLES)])
    assert draws.min() > c
    conditional_cdf = lambda x: 1.0 - pareto2.sf(x) / pareto2.sf(c)
    assert stats.kstest(draws, conditional_cdf).pvalue > 0.01


def test_geometric_truncated_count(geometric_half):
    assert sample_count_truncated(geometric_half, 3, 0.0) == 3
    assert sample_count_truncated(geometric_half, 3, 0.5) == 3
    assert sample_count_truncated(geometric_half, 3, 0.7) == 4
    assert sample_count_truncated(geometric_half, 1, 0.1) >= 1


def test_truncated_count_rejects_kstar_below_one(geometric_half):
    with pytest.raises(DomainError):
        sample_count_truncated(geometric_half, 0, 0.5)


def test_geometric_truncated_count_law(rng):
    c = Geometric(0.3)
    draws = np.array([c.sample_truncated(4, u) for u in rng.random(LAW_SAMPLES)])
    assert draws.min() >= 4
    # memoryless: N - 3 | N >= 4 is Geometric(0.3)
    ks = np.arange(1, 12)
    observed = np.array([np.count_nonzero(draws - 3 == k) for k in ks] + [np.count_nonzero(draws - 3 > 11)])
    expected = np.append(c.pmf(ks), c.sf_ge(12)) * len(draws)
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_poisson_truncated_count_law(rng):
    c = Poisson(3.0)
    draws = np.array([c.sample_truncated(4, u) for u in rng.random(LAW_SAMPLES)])
    assert draws.min() >= 4
    ks = np.arange(4, 10)
    mass = c.sf_ge(4)
    observed = np.array([np.count_nonzero(draws == k) for k in ks] + [np.count_nonzero(draws >= 10)])
    expected = np.append(c.pmf(ks), c.sf_ge(10)) / mass * len(draws)
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_poisson_truncation_at_zero_is_plain_inversion():
    c = Poisson(2.0)
    assert c.sample_truncated(0, 0.0) == 0
    assert c.sample_truncated(0, 0.999) == int(stats.poisson.ppf(0.999, 2.0))


def test_fixed_count_is_degenerate(rng):
    c = FixedCount(4)
    assert c.sample(rng, None) == 4
    assert c.sample(rng, 3).tolist() == [4, 4, 4]
    assert c.sample_truncated(2, 0.7) == 4
    with pytest.raises(ThresholdUnreachableError):
        c.sample_truncated(5, 0.1)


def test_max_tail_fixed_benchmark_values(pareto2):
    # n = 5, a_n = 25
    p_max = max_tail_fixed(pareto2, 5, 25.0)
    assert p_max == pytest.approx(1.0 - (1.0 - 1.0 / 676.0) ** 5, rel=1e-12)
    assert round(p_max, 5) == 0.00737
    # n = 5, a_n = 5e4
    assert max_tail_fixed(pareto2, 5, 5e4) == pytest.approx(1.99992e-9, rel=1e-5)


def test_max_tail_fixed_single_step_is_the_tail(pareto2):
    for a in (0.5, 4.0, 25.0, 1e6):
        assert max_tail_fixed(pareto2, 1, a) == float(pareto2.sf(a))


def test_max_tail_fixed_below_support(pareto2):
    assert max_tail_fixed(pareto2, 3, 0.0) == 1.0


def test_max_tail_random_geometric():
    # beta = 1, rho = 0.2, a_rho = 1e3 / 0.2
    p_max = max_tail_random(Pareto(1.0), Geometric(0.2), 5000.0)
    assert p_max == pytest.approx(1.0 / 1001.0, rel=1e-12)
    assert round(p_max * 1e3, 3) == 0.999


def test_max_tail_random_poisson_matches_generating_function(pareto2):
    c = Poisson(4.0)
    eps = float(pareto2.sf(10.0))
    assert max_tail_random(pareto2, c, 10.0) == pytest.approx(1.0 - float(c.pgf(1.0 - eps)), rel=1e-10)


def test_max_tail_random_with_fixed_count_matches_fixed(pareto2):
    assert max_tail_random(pareto2, FixedCount(5), 25.0) == pytest.approx(
        max_tail_fixed(pareto2, 5, 25.0), rel=1e-12)


def test_max_exceedance_rows_exceed(pareto2, rng):
    rows = sample_max_exceedance(pareto2, 5, 2.0, rng, 10_000)
    assert rows.shape == (10_000, 5)
    assert (rows.max(axis=1) > 2.0).all()


def test_max_exceedance_first_coordinate_frequency(pareto2, rng):
    n, a = 5, 2.0
    rows = sample_max_exceedance(pareto2, n, a, rng, 100_000)
    expected = float(pareto2.sf(a)) / max_tail_fixed(pareto2, n, a)
    assert np.mean(rows[:, 0] > a) == pytest.approx(expected, abs=0.01)


def test_count_max_exceedance_table_weights(pareto2):
    c = Geometric(0.5)
    ks, cumulative = count_max_exceedance_table(pareto2, c, 3.0)
    assert ks[0] == 1
    total = cumulative[-1]
    assert total == pytest.approx(max_tail_random(pareto2, c, 3.0), rel=1e-12)


def test_count_max_exceedance_with_fixed_count(pareto2, rng):
    draws = sample_count_max_exceedance(pareto2, FixedCount(3), 10.0, rng, 100)
    assert (draws == 3).all()


def test_factories():
    assert isinstance(make_step_distribution("pareto", beta=2.0), Pareto)
    assert isinstance(make_step_distribution("weibull", shape=0.5), Weibull)
    assert isinstance(make_count_distribution("poisson", lam=2.0), Poisson)
    with pytest.raises(DomainError):
        make_count_distribution("geometric")
    with pytest.raises(DomainError):
        make_step_distribution("lognormal")


@pytest.mark.parametrize("c", [Geometric(0.05), Geometric(0.5), Poisson(0.3), Poisson(40.0)], ids=repr)
def test_pmf_sums_to_one(c):
    cutoff = c.upper_cutoff(1e-12)
    ks = np.arange(0, cutoff + 1)
    assert math.fsum(c.pmf(ks)) + c.sf_ge(cutoff + 1) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("c", [Geometric(0.2), Geometric(0.9), Poisson(0.5), Poisson(12.0), FixedCount(3)],
                         ids=repr)
def test_generating_function_shape(c):
    assert float(c.pgf(1.0)) == pytest.approx(1.0, abs=1e-12)
    values = c.pgf(np.linspace(0.0, 1.0, 1001))
    assert (np.diff(values) >= 0.0).all()


@pytest.mark.parametrize("n", [1, 2, 5, 50, 10 ** 6])
@pytest.mark.parametrize("a", [0.0, 1.0, 25.0, 1e4, 1e8])
def test_max_tail_fixed_between_one_and_n_tails(pareto2, n, a):
    tail = float(pareto2.sf(a))
    p_max = max_tail_fixed(pareto2, n, a)
    assert tail * (1.0 - 1e-12) <= p_max <= n * tail * (1.0 + 1e-12)
    assert p_max <= 1.0
