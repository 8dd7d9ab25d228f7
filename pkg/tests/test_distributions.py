import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shockmodel.distributions import (DiscreteFinite, Exponential, Pareto, Uniform, Weibull,
                                      distribution_from_dict)
from shockmodel.errors import ConfigError

CONTINUOUS = [Exponential(1.5), Pareto(1.0, 2.0), Uniform(-1.0, 3.0), Weibull(2.0, 1.7)]


@pytest.mark.parametrize("dist", CONTINUOUS, ids=lambda d: d.family)
@given(p=st.floats(0.001, 0.999))
def test_quantile_round_trip(dist, p):
    x = dist.quantile(p)
    assert abs(dist.cdf(x) - p) < 1e-9
    assert abs(dist.quantile(dist.cdf(x)) - x) <= 1e-9 * max(1.0, abs(x))


@pytest.mark.parametrize("dist", CONTINUOUS + [DiscreteFinite((1, 2, 5), (0.2, 0.5, 0.3))], ids=lambda d: d.family)
@given(x=st.floats(-10, 50))
def test_sf_complements_cdf(dist, x):
    assert abs(dist.sf(x) + dist.cdf(x) - 1.0) <= 1e-12


@pytest.mark.parametrize("dist", CONTINUOUS, ids=lambda d: d.family)
def test_cdf_nondecreasing_and_tail_matches_sf(dist):
    xs = np.linspace(-2, 20, 500)
    cdf = dist.cdf(xs)
    assert np.all(np.diff(cdf) >= 0)
    assert np.allclose(dist.tail(xs), dist.sf(xs), atol=1e-15)


def test_discrete_tail_includes_atom():
    d = DiscreteFinite((1.0, 2.0, 3.0), (0.5, 0.3, 0.2))
    assert d.tail(2.0) == pytest.approx(0.5)
    assert d.sf(2.0) == pytest.approx(0.2)
    assert d.cdf(2.0) == pytest.approx(0.8)
    assert d.tail(0.0) == 1.0 and d.tail(3.5) == 0.0


def test_discrete_validation():
    with pytest.raises(ConfigError):
        DiscreteFinite((1, 2), (0.5, 0.6))
    with pytest.raises(ConfigError):
        DiscreteFinite((1, 2), (1.5, -0.5))
    # sums within 1e-12 are accepted
    DiscreteFinite((1, 2), (0.5, 0.5 + 5e-13))


def test_discrete_sampling_frequencies(rng):
    d = DiscreteFinite((3.0, 1.0, 2.0), (0.2, 0.5, 0.3))
    x = d.sample(rng, 200_000)
    for v, p in zip((1.0, 2.0, 3.0), (0.5, 0.3, 0.2)):
        assert abs(np.mean(x == v) - p) < 4 * math.sqrt(p * (1 - p) / x.size)


def test_exponential_sample_sums_match_mean(rng):
    g = Exponential(2.0)
    counts = np.full(50_000, 10)
    sums = g.sample_sums(rng, counts)
    assert abs(sums.mean() - 5.0) < 4 * math.sqrt(10 / 4 / counts.size)


def test_generic_sample_sums(rng):
    g = Uniform(0.0, 2.0)
    counts = np.array([0, 1, 5, 3])
    sums = g.sample_sums(rng, counts)
    assert sums[0] == 0.0 and sums.shape == (4,)
    assert np.all(sums[1:] > 0)


def test_round_trip_through_dict():
    for d in CONTINUOUS + [DiscreteFinite((1, 2), (0.25, 0.75))]:
        assert distribution_from_dict(d.to_dict()) == d


def test_config_errors_name_the_field():
    with pytest.raises(ConfigError, match="f.rate"):
        distribution_from_dict({"family": "exponential", "rate": -1}, "f")
    with pytest.raises(ConfigError, match="family"):
        distribution_from_dict({"family": "gumbel"}, "f")
