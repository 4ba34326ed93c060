from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from rare_mcmc.errors import DomainError, OracleInfeasibleError
from rare_mcmc.services.distributions import Geometric, Pareto, Weibull
from rare_mcmc.services.oracle import (
    FIXTURE_GRID,
    build_fixture,
    fixture_value,
    format_params,
    load_fixture,
    parse_params,
    pareto2_two_step_tail,
    rejection_estimate,
    rejection_sample_conditional,
    tail_prob_closed_form,
    tail_prob_quadrature,
)

FIXTURE = Path(__file__).parent / "fixtures" / "oracle_values.csv"


@pytest.fixture
def records():
    return load_fixture(FIXTURE)


@pytest.mark.parametrize("a", [0.5, 4.0, 25.0])
def test_quadrature_single_step_is_the_tail(pareto2, a):
    result = tail_prob_quadrature(pareto2, 1, a)
    assert result.value == float(pareto2.sf(a))
    assert result.method == "quadrature"


def test_quadrature_below_support_is_one(pareto2):
    assert tail_prob_quadrature(pareto2, 2, 0.0).value == 1.0


@pytest.mark.parametrize("a", [2.0, 4.0, 25.0])
def test_quadrature_matches_committed_values(pareto2, records, a):
    expected = fixture_value(records, "fixed", a, beta=2, n=2)["value"]
    result = tail_prob_quadrature(pareto2, 2, a)
    assert result.value == pytest.approx(expected, rel=1e-8)
    assert result.abs_error_bound >= 0.0


def test_quadrature_depth_limit(pareto2):
    with pytest.raises(OracleInfeasibleError):
        tail_prob_quadrature(pareto2, 5, 10.0)
    with pytest.raises(DomainError):
        tail_prob_quadrature(pareto2, 0, 10.0)


def test_quadrature_monotone_in_depth(pareto2):
    a = 6.0
    values = [tail_prob_quadrature(pareto2, k, a).value for k in (1, 2, 3)]
    assert values[0] == float(pareto2.sf(a))
    assert values[0] <= values[1] <= values[2] <= 1.0


def test_quadrature_weibull_two_steps():
    d = Weibull(0.5)
    value = tail_prob_quadrature(d, 2, 10.0).value
    assert float(d.sf(10.0)) < value < 1.0


def test_closed_form(pareto2):
    assert tail_prob_closed_form(pareto2, 1, 4.0).value == pytest.approx(0.04, rel=1e-14)
    assert pareto2_two_step_tail(0.0) == 1.0
    assert tail_prob_closed_form(pareto2, 2, 4.0).value == pytest.approx(pareto2_two_step_tail(4.0))
    with pytest.raises(OracleInfeasibleError):
        tail_prob_closed_form(Pareto(3.0), 2, 4.0)
    with pytest.raises(OracleInfeasibleError):
        tail_prob_closed_form(pareto2, 3, 4.0)


def test_rejection_single_step_matches_conditional_law(pareto2, rng):
    a = 2.0
    draws = rejection_sample_conditional(pareto2, a, rng, 3000, n=1)[:, 0]
    assert draws.min() > a
    assert stats.kstest(draws, lambda x: 1.0 - pareto2.sf(x) / pareto2.sf(a)).pvalue > 1e-3


def test_rejection_at_zero_threshold_is_unconditional(pareto2, rng):
    draws = rejection_sample_conditional(pareto2, 0.0, rng, 3000, n=2)
    assert draws.shape == (3000, 2)
    assert stats.kstest(draws[:, 0], pareto2.cdf).pvalue > 1e-3


def test_rejection_random_count_returns_walks(pareto2, rng):
    walks = rejection_sample_conditional(pareto2, 3.0, rng, 50, count=Geometric(0.5))
    assert len(walks) == 50
    assert all(len(w) >= 1 and w.sum() > 3.0 for w in walks)


def test_rejection_acceptance_rate_matches_quadrature(pareto2, rng, records):
    expected = fixture_value(records, "fixed", 4.0, beta=2, n=2)["value"]
    result = rejection_estimate(pareto2, 4.0, rng, 200_000, n=2)
    assert result.method == "rejection"
    assert abs(result.value - expected) <= result.abs_error_bound


def test_rejection_guard(pareto2, rng):
    with pytest.raises(OracleInfeasibleError):
        rejection_sample_conditional(pareto2, 1e4, rng, 1, n=5)
    with pytest.raises(OracleInfeasibleError):
        rejection_estimate(pareto2, 1e4, rng, 10, n=5)


def test_rejection_guard_reads_settings(pareto2, rng, monkeypatch):
    monkeypatch.setenv("RARE_MCMC_MAX_ORACLE_TRIALS", "2")
    with pytest.raises(OracleInfeasibleError):
        rejection_sample_conditional(pareto2, 4.0, rng, 1, n=2)


def test_rejection_needs_one_model(pareto2, rng):
    with pytest.raises(DomainError):
        rejection_sample_conditional(pareto2, 4.0, rng, 1)


def test_params_roundtrip():
    text = format_params(beta=2.0, n=2)
    assert text == "beta=2;n=2"
    assert parse_params(text) == {"beta": 2.0, "n": 2.0}


def test_missing_fixture_record(records):
    with pytest.raises(KeyError):
        fixture_value(records, "fixed", 3.0, beta=2, n=2)


def test_build_fixture_reproduces_committed_values(tmp_path, records):
    target = tmp_path / "oracle.csv"
    results = build_fixture(str(target))
    assert len(results) == len(FIXTURE_GRID)
    rebuilt = load_fixture(target)
    assert target.read_bytes().count(b"\r") == 0
    for old, new in zip(records, rebuilt):
        assert (old["model"], old["params"], old["a"], old["method"]) == \
            (new["model"], new["params"], new["a"], new["method"])
        assert new["value"] == pytest.approx(old["value"], rel=1e-8)
