import math

import numpy as np
import pytest

from idlefair.distributions import RateDistribution
from idlefair.rng import RngStream
from idlefair.simulation import (
    KIND_ABANDONMENT,
    KIND_ARRIVAL,
    KIND_COMPLETION,
    KIND_NAMES,
    KIND_POTENTIAL_NOOP,
    SystemConfig,
    init,
    simulate,
    simulate_per_server,
    step,
)
from idlefair.stats import erlang_a_stationary, ks_distance

from conftest import E0_RATE_DIST, e0_system


def _config(**kw):
    base = dict(
        n=2,
        lambda_n=1.0,
        rate_dist=E0_RATE_DIST,
        gamma=0.5,
        horizon=5.0,
        x0=0,
        policy="LISF",
        seed=RngStream(2024, 5),
    )
    base.update(kw)
    return SystemConfig(**base)


class TestInit:
    def test_empty_system(self):
        state = init(_config(x0=0))
        assert state.head == 0
        assert state.qlen == 0
        assert state.idle_count == state.n

    def test_full_system(self):
        state = init(_config(x0=2))
        assert state.head == 2
        assert state.qlen == 0
        assert state.idle_count == 0

    def test_overfull_system_queues_remainder(self):
        state = init(_config(x0=5))
        assert state.head == 5
        assert state.qlen == 3
        assert state.idle_count == 0

    def test_lowest_index_placement(self):
        state = init(_config(n=2, x0=1))
        assert not state.idle_flags[0]
        assert state.idle_flags[1]

    def test_explicit_rates_frozen(self):
        traj = simulate(_config(rates=(1.0, 2.0)))
        assert traj.rates.tolist() == [1.0, 2.0]

    def test_rates_outside_support_rejected(self):
        with pytest.raises(ValueError):
            _config(rates=(1.0, 7.0))


class TestStep:
    def test_step_returns_records(self):
        state = init(_config(rates=(1.0, 2.0)))
        records = step(state)
        assert len(records) >= 1
        assert records[0][0] == state.clock

    def test_idle_only_system_produces_noops(self):
        # no arrivals, nobody in service: only potential no-ops can occur
        traj = simulate(_config(n=1, lambda_n=0.0, x0=0, rates=(1.5,), horizon=50.0))
        assert traj.kinds.size > 0
        assert np.all(traj.kinds == KIND_POTENTIAL_NOOP)
        assert np.all(traj.heads == 0)
        assert np.all(traj.idles == 1)

    def test_splitting_law(self):
        # kappa hits the rate-2 server with probability 2/3; binomial
        # oracle over 1e5 first events, SE ~ 0.0015
        hits = 0
        total = 0
        for rep in range(100_000):
            cfg = _config(
                n=2, lambda_n=0.0, x0=2, rates=(1.0, 2.0), horizon=0.5,
                seed=RngStream(31337, 0).substream(rep),
            )
            traj = simulate(cfg)
            if traj.kinds.size:
                total += 1
                hits += traj.servers[0] == 1
        assert total > 70_000
        assert abs(hits / total - 2.0 / 3.0) < 0.005

    def test_golden_trace(self):
        # frozen from a run whose first ten events were traced by hand
        # against the raw stream draws (arrival times, potential epochs,
        # splitting uniforms) under the LISF state machine
        traj = simulate(_config(rates=(1.0, 2.0)), validate=True)
        expected = [
            (0.02316696625461737, "potential_no_op", 1, 0, 2),
            (0.0920355491150759, "potential_no_op", 1, 0, 2),
            (0.2650429589166101, "potential_no_op", 1, 0, 2),
            (0.4203428030862458, "arrival", -1, 1, 1),
            (0.4203428030862458, "routing", 0, 1, 1),
            (0.48768680145550936, "potential_no_op", 1, 1, 1),
            (0.5476696221180946, "potential_no_op", 1, 1, 1),
            (1.1860183709119005, "completion", 0, 0, 2),
            # longest-idle wins: server 1 (idle since 0) is picked over
            # server 0 (idle since 1.186)
            (2.0153555105618164, "arrival", -1, 1, 1),
            (2.0153555105618164, "routing", 1, 1, 1),
        ]
        got = [
            (traj.times[i], KIND_NAMES[traj.kinds[i]], traj.servers[i], traj.heads[i], traj.idles[i])
            for i in range(10)
        ]
        for g, e in zip(got, expected):
            assert g[0] == e[0]
            assert g[1:] == e[1:]


def _occupancy_histogram(traj, t_lo, t_hi, max_state):
    """Exact time-in-state fractions of the headcount over [t_lo, t_hi]."""
    ts = np.concatenate(([0.0], traj.times, [traj.horizon]))
    vals = np.concatenate(([traj.initial_head()], traj.heads, [0]))
    lo = np.clip(ts[:-1], t_lo, t_hi)
    hi = np.clip(ts[1:], t_lo, t_hi)
    dur = hi - lo
    hist = np.zeros(max_state + 1)
    states = np.minimum(vals[:-1], max_state)
    np.add.at(hist, states, dur)
    return hist / (t_hi - t_lo)


class TestSimulate:
    def test_mm_infinity_equivalence(self):
        # gamma = mu = lambda = 1, n = 1: the headcount is a birth-death
        # chain with birth 1 and death j, i.e. stationary Poisson(1)
        cfg = _config(n=1, lambda_n=1.0, gamma=1.0, rates=(1.0,),
                      rate_dist=RateDistribution.point(1.0), x0=1, horizon=4000.0)
        traj = simulate(cfg)
        hist = _occupancy_histogram(traj, 2000.0, 4000.0, 25)
        oracle = erlang_a_stationary(1, 1.0, 1.0, 1.0, cutoff=25)
        assert 0.5 * np.abs(hist - oracle).sum() < 0.05
        poisson1 = np.exp(-1.0) / np.array([math.factorial(j) for j in range(26)], dtype=float)
        assert np.allclose(oracle, poisson1 / poisson1.sum(), atol=1e-12)

    def test_erlang_a_delay_probability(self):
        # identical rates: P(X >= n) against the birth-death oracle
        n = 50
        mu = 1.5
        lam = n * mu - math.sqrt(n)
        oracle = erlang_a_stationary(n, lam, mu, 0.5, cutoff=400)
        p_delay_oracle = oracle[n:].sum()
        est = []
        for rep in range(100):
            cfg = SystemConfig(
                n=n, lambda_n=lam, rate_dist=RateDistribution.point(mu), gamma=0.5,
                horizon=20.0, x0=n, policy="LISF",
                seed=RngStream(555, 0).substream(rep),
            )
            traj = simulate(cfg)
            ts = np.concatenate(([0.0], traj.times, [traj.horizon]))
            vals = np.concatenate(([traj.initial_head()], traj.heads, [0]))
            lo, hi = np.clip(ts[:-1], 10.0, 20.0), np.clip(ts[1:], 10.0, 20.0)
            est.append(((hi - lo) * (vals[:-1] >= n)).sum() / 10.0)
        assert abs(np.mean(est) - p_delay_oracle) < 0.02

    def test_zero_arrival_poisson_count(self):
        # potential no-ops form a Poisson process at the summed rate;
        # 4-sigma band on the count
        rates = (1.0, 2.0, 1.5)
        total = sum(rates)
        horizon = 50.0
        cfg = SystemConfig(
            n=3, lambda_n=0.0, rate_dist=E0_RATE_DIST, gamma=0.5, horizon=horizon,
            rates=rates, x0=0, policy="LISF", seed=RngStream(77, 0),
        )
        traj = simulate(cfg)
        assert np.all(traj.kinds == KIND_POTENTIAL_NOOP)
        mean = total * horizon
        assert abs(traj.kinds.size - mean) <= 4 * math.sqrt(mean)

    def test_invariants_under_stress(self):
        # heavy abandonment plus an initial queue exercises every branch
        cfg = _config(n=3, lambda_n=12.0, gamma=4.0, x0=9, horizon=30.0,
                      rates=(1.0, 2.0, 1.0))
        traj = simulate(cfg, validate=True)
        report = traj.verify()
        assert report["violations"] == 0
        assert traj.abandonments > 0
        # conservation identity on the full path
        assert traj.final_head == cfg.x0 + traj.arrivals - traj.completions - traj.abandonments

    def test_deterministic_replay(self):
        a = simulate(e0_system(30))
        b = simulate(e0_system(30))
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.kinds, b.kinds)
        assert np.array_equal(a.servers, b.servers)

    def test_cum_idle_matches_episode_sum(self):
        traj = simulate(e0_system(30), validate=True)
        total_idle_time = traj.cum_idle_per_server().sum()
        ts, cum = traj.idle_count_integral_nodes()
        assert total_idle_time == pytest.approx(cum[-1], rel=1e-9)


class TestPerServerConstruction:
    def test_verifies(self):
        traj = simulate_per_server(e0_system(30), validate=True)
        assert traj.verify()["violations"] == 0
        assert traj.potential_noops == 0

    def test_single_server_service_law(self):
        # one customer, no arrivals: the completion time is Exp(mu) under
        # both constructions; Monte Carlo band of 3 standard errors
        mu = 1.5
        reps = 2000
        for builder in (simulate, simulate_per_server):
            first = []
            for rep in range(reps):
                cfg = SystemConfig(
                    n=1, lambda_n=0.0, rate_dist=RateDistribution.point(mu), gamma=0.5,
                    horizon=50.0, x0=1, policy="LISF",
                    seed=RngStream(888, 0).substream(rep),
                )
                traj = builder(cfg)
                comp = traj.times[traj.kinds == KIND_COMPLETION]
                first.append(comp[0])
            se = (1 / mu) / math.sqrt(reps)
            assert abs(np.mean(first) - 1 / mu) < 3 * se

    def test_construction_equivalence_ks(self):
        # distributional cross-check of the two completion mechanisms
        n, reps = 20, 400
        lam = n * E0_RATE_DIST.mean - math.sqrt(n)
        term_a, term_b = [], []
        for rep in range(reps):
            cfg = SystemConfig(
                n=n, lambda_n=lam, rate_dist=E0_RATE_DIST, gamma=0.5, horizon=10.0,
                x0=n, policy="LISF", seed=RngStream(999, 0).substream(rep),
            )
            term_a.append(simulate(cfg).final_head)
            term_b.append(simulate_per_server(cfg).final_head)
        assert ks_distance(term_a, term_b) <= 0.1


class TestTrajectoryAccessors:
    def test_headcount_at_grid(self):
        traj = simulate(_config(rates=(1.0, 2.0)))
        grid = np.array([0.0, 1.0, 2.0, 5.0])
        heads = traj.headcount_at(grid)
        assert heads[0] == 0  # before any event
        idx = np.searchsorted(traj.times, 2.0, side="right") - 1
        assert heads[2] == traj.heads[idx]

    def test_idle_integral_nodes(self):
        traj = simulate(_config(rates=(1.0, 2.0)))
        ts, cum = traj.idle_count_integral_nodes()
        assert ts[0] == 0.0 and ts[-1] == traj.horizon
        assert np.all(np.diff(cum) >= 0)
