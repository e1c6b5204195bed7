import numpy as np
import pytest

from idlefair.distributions import (
    InterarrivalLaw,
    InterarrivalSource,
    RateDistribution,
    sample_interarrival,
    sample_rates,
)
from idlefair.rng import RngStream


class TestInterarrivalLaw:
    def test_deterministic_always_one(self):
        samples = sample_interarrival(RngStream(1, 0), InterarrivalLaw.deterministic(), size=100)
        assert np.all(samples == 1.0)

    def test_erlang_mean(self):
        # Erlang(4) has variance 1/4, so SE of the mean is 0.5/1000
        law = InterarrivalLaw.erlang(4)
        assert law.ca2 == 0.25
        samples = sample_interarrival(RngStream(2, 0), law, size=1_000_000)
        assert abs(samples.mean() - 1.0) < 4 * (0.5 / 1000)

    def test_exponential_cv2(self):
        law = InterarrivalLaw.exponential()
        samples = sample_interarrival(RngStream(3, 0), law, size=1_000_000)
        ca2_hat = samples.var(ddof=1) / samples.mean() ** 2
        assert abs(ca2_hat - 1.0) < 0.02

    def test_hyperexponential_moments(self):
        # p/r1 + (1-p)/r2 = 0.75 + 0.25 = 1, ca2 = 2*0.5/(2/3)^2 + 2*0.5/4 - 1 = 1.5
        law = InterarrivalLaw.hyperexponential(0.5, 2.0 / 3.0, 2.0)
        assert abs(law.ca2 - 1.5) < 1e-12
        samples = sample_interarrival(RngStream(4, 0), law, size=1_000_000)
        assert abs(samples.mean() - 1.0) < 0.006
        assert abs(samples.var(ddof=1) - 1.5) < 0.05

    def test_hyperexponential_rejects_non_unit_mean(self):
        with pytest.raises(ValueError):
            InterarrivalLaw.hyperexponential(0.5, 1.0, 2.0)

    def test_erlang_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            InterarrivalLaw.erlang(0)

    def test_source_matches_batch_for_exponential(self):
        law = InterarrivalLaw.exponential()
        stream = RngStream(5, 0)
        batch = sample_interarrival(stream, law, size=5000)
        src = InterarrivalSource(stream, law)
        seq = np.array([src.next() for _ in range(5000)])
        assert np.allclose(batch, seq, rtol=0, atol=0)

    def test_round_trip_dict(self):
        for law in (
            InterarrivalLaw.exponential(),
            InterarrivalLaw.deterministic(),
            InterarrivalLaw.erlang(3),
            InterarrivalLaw.hyperexponential(0.5, 2.0 / 3.0, 2.0),
        ):
            assert InterarrivalLaw.from_dict(law.to_dict()) == law


class TestRateDistribution:
    def test_point_samples(self):
        rates = sample_rates(RngStream(6, 0), RateDistribution.point(1.5), 3)
        assert rates.tolist() == [1.5, 1.5, 1.5]

    def test_two_point_fraction(self):
        # binomial oracle: SE = 0.5/1000
        dist = RateDistribution.two_point(1.0, 0.5, 2.0)
        rates = sample_rates(RngStream(6, 1), dist, 1_000_000)
        frac_fast = (rates == 2.0).mean()
        assert abs(frac_fast - 0.5) < 0.002

    def test_uniform_mean(self):
        dist = RateDistribution.uniform(1.0, 2.0)
        rates = sample_rates(RngStream(6, 2), dist, 1_000_000)
        assert abs(rates.mean() - 1.5) < 0.002

    def test_analytic_moments_match_monte_carlo(self):
        # 4-standard-error bands around the stored analytic moments
        cases = [
            RateDistribution.two_point(1.0, 0.3, 3.0),
            RateDistribution.uniform(0.5, 2.5),
            RateDistribution.discrete([(1.0, 0.25), (2.0, 0.25), (3.0, 0.5)]),
        ]
        n = 1_000_000
        for i, dist in enumerate(cases):
            rates = sample_rates(RngStream(7, i), dist, n)
            se1 = np.sqrt(dist.variance / n)
            assert abs(rates.mean() - dist.mean) < 4 * se1
            sq = rates**2
            se2 = sq.std(ddof=1) / np.sqrt(n)
            assert abs(sq.mean() - dist.second_moment) < 4 * se2

    def test_support_bounds(self):
        dist = RateDistribution.uniform(1.0, 2.0)
        rates = sample_rates(RngStream(8, 0), dist, 10_000)
        assert rates.min() >= dist.support_min
        assert rates.max() <= dist.support_max

    def test_validation(self):
        with pytest.raises(ValueError):
            RateDistribution.two_point(1.0, 1.2, 2.0)
        with pytest.raises(ValueError):
            RateDistribution.two_point(-1.0, 0.5, 2.0)
        with pytest.raises(ValueError):
            RateDistribution.uniform(0.0, 1.0)
        with pytest.raises(ValueError):
            RateDistribution.discrete([(1.0, 0.4), (2.0, 0.4)])
        with pytest.raises(ValueError):
            RateDistribution.point(0.0)

    def test_discrete_merges_and_sorts(self):
        dist = RateDistribution.discrete([(2.0, 0.25), (1.0, 0.5), (2.0, 0.25)])
        assert dist.atoms() == [(1.0, 0.5), (2.0, 0.5)]
        assert dist.support_min == 1.0
        assert dist.support_max == 2.0

    def test_round_trip_dict(self):
        for dist in (
            RateDistribution.point(1.5),
            RateDistribution.two_point(1.0, 0.5, 2.0),
            RateDistribution.uniform(1.0, 2.0),
            RateDistribution.discrete([(1.0, 0.25), (2.0, 0.75)]),
        ):
            assert RateDistribution.from_dict(dist.to_dict()) == dist
