"""Shared fixtures and the reference experiment constants.

The default experiment (two-point rates {1, 2} with equal probability,
lambda_hat = -1, gamma = 0.5, exponential arrivals, horizon 20) is used
across the suite; its base seed is fixed once here.
"""
from __future__ import annotations

import math

import numpy as np
import pytest

from idlefair.distributions import InterarrivalLaw, RateDistribution
from idlefair.ladder import LadderSpec
from idlefair.rng import RngStream
from idlefair.simulation import SystemConfig, Trajectory

E0_SEED = 20260809
E0_RATE_DIST = RateDistribution.two_point(1.0, 0.5, 2.0)
E0_LAMBDA_HAT = -1.0
E0_GAMMA = 0.5
E0_HORIZON = 20.0


def e0_ladder(n_values=(100, 400), reps=200, policy="LISF", stream_id=0, **kw) -> LadderSpec:
    return LadderSpec(
        n_values=tuple(n_values),
        lambda_hat=E0_LAMBDA_HAT,
        rate_dist=E0_RATE_DIST,
        gamma=E0_GAMMA,
        horizon=E0_HORIZON,
        arrival_law=InterarrivalLaw.exponential(),
        xi0=0.0,
        reps=reps,
        policy=policy,
        base_seed=RngStream(E0_SEED, stream_id),
        **kw,
    )


def e0_system(n: int, rep: int = 0, policy="LISF", stream_id=0, **kw) -> SystemConfig:
    lam = n * E0_RATE_DIST.mean + E0_LAMBDA_HAT * math.sqrt(n)
    params = dict(
        n=n,
        lambda_n=lam,
        rate_dist=E0_RATE_DIST,
        gamma=E0_GAMMA,
        horizon=E0_HORIZON,
        x0=n,
        policy=policy,
        seed=RngStream(E0_SEED, stream_id).substream(rep),
    )
    params.update(kw)
    return SystemConfig(**params)


def synthetic_trajectory(
    n: int,
    rates,
    events=(),
    episodes=(),
    x0: int = 0,
    horizon: float = 10.0,
    lambda_n: float = 1.0,
    gamma: float = 0.5,
    policy: str = "LISF",
) -> Trajectory:
    """Hand-built trajectory for exact-arithmetic tests.

    ``events`` rows are (time, kind, server, head, idle); ``episodes``
    rows are (server, start, end, initial, open).
    """
    # synthetic configs only need a support covering the rates
    lo, hi = min(rates), max(rates)
    dist = (
        RateDistribution.point(lo)
        if lo == hi
        else RateDistribution.uniform(lo, hi)
    )
    config = SystemConfig(
        n=n, lambda_n=lambda_n, rate_dist=dist, gamma=gamma, horizon=horizon,
        rates=tuple(float(r) for r in rates), x0=x0, policy=policy,
    )
    events = list(events)
    episodes = list(episodes)
    return Trajectory(
        config=config,
        rates=np.asarray(rates, dtype=float),
        times=np.asarray([e[0] for e in events], dtype=float),
        kinds=np.asarray([e[1] for e in events], dtype=np.int8),
        servers=np.asarray([e[2] for e in events], dtype=np.int32),
        heads=np.asarray([e[3] for e in events], dtype=np.int64),
        idles=np.asarray([e[4] for e in events], dtype=np.int64),
        ep_server=np.asarray([e[0] for e in episodes], dtype=np.int32),
        ep_start=np.asarray([e[1] for e in episodes], dtype=float),
        ep_end=np.asarray([e[2] for e in episodes], dtype=float),
        ep_initial=np.asarray([bool(e[3]) for e in episodes], dtype=bool),
        ep_open=np.asarray([bool(e[4]) for e in episodes], dtype=bool),
        arrivals=0,
        completions=0,
        abandonments=0,
        potential_noops=0,
        routings=0,
        final_head=events[-1][3] if events else x0,
    )


@pytest.fixture(scope="session")
def small_lisf_trajectory():
    """One verified mid-size LISF trajectory reused by read-only tests."""
    from idlefair.simulation import simulate

    traj = simulate(e0_system(50), validate=True)
    traj.verify()
    return traj
