"""Statistical machinery: two-sample KS distance, birth-death stationary
oracle, sample summaries, and the idleness martingale residual for LISF.

The martingale residual is the sharpest available kernel diagnostic: for
LISF with Poisson arrivals the conditional expected idle-spell length of
a newly idle server is exactly (idle count + 1)/arrival rate, so the
residual path below has zero mean at every time if and only if the
event construction is right.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fairness import uniform_grid
from .measures import BorelSet
from .simulation import (
    KIND_ABANDONMENT,
    KIND_ARRIVAL,
    KIND_COMPLETION,
    KIND_POTENTIAL_NOOP,
    KIND_ROUTING,
    Trajectory,
)


def ks_distance(sample1, sample2) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: the largest gap between
    the empirical CDFs over the pooled sample points."""
    s1 = np.sort(np.asarray(sample1, dtype=float))
    s2 = np.sort(np.asarray(sample2, dtype=float))
    if s1.size == 0 or s2.size == 0:
        raise ValueError("ks_distance needs two nonempty samples")
    pool = np.concatenate([s1, s2])
    cdf1 = np.searchsorted(s1, pool, side="right") / s1.size
    cdf2 = np.searchsorted(s2, pool, side="right") / s2.size
    return float(np.abs(cdf1 - cdf2).max())


def erlang_a_stationary(n: int, lam: float, mu: float, gamma: float, cutoff: int) -> np.ndarray:
    """Stationary law of the identical-rates birth-death chain: births at
    lam, deaths at min(j, n)*mu + max(j - n, 0)*gamma.

    ``cutoff`` truncates the state space; if the neglected tail mass can
    exceed 1e-10 the call fails loudly rather than return a biased law.
    """
    if n < 1 or lam <= 0 or mu <= 0 or gamma < 0:
        raise ValueError("need n >= 1, lam > 0, mu > 0, gamma >= 0")
    if gamma == 0 and lam >= n * mu:
        raise ValueError(f"chain not ergodic: gamma=0 and lam={lam} >= n*mu={n * mu}")
    if cutoff <= n:
        raise ValueError(f"cutoff={cutoff} must exceed n={n}")

    def death(j: int) -> float:
        return min(j, n) * mu + max(j - n, 0) * gamma

    log_pi = np.empty(cutoff + 1)
    log_pi[0] = 0.0
    acc = 0.0
    for j in range(1, cutoff + 1):
        acc += math.log(lam) - math.log(death(j))
        log_pi[j] = acc
    pi = np.exp(log_pi - log_pi.max())
    total = pi.sum()
    ratio = lam / death(cutoff + 1)
    if ratio >= 1.0:
        raise ValueError(
            f"cutoff={cutoff} too small: birth/death ratio {ratio:.3f} >= 1 beyond it"
        )
    tail = pi[-1] * ratio / (1.0 - ratio) / total
    if tail >= 1e-10:
        raise ValueError(
            f"cutoff={cutoff} too small: neglected tail mass approx {tail:.3e}"
        )
    return pi / total


@dataclass
class Summary:
    mean: float
    se: float
    quantiles: dict


def summarize(samples, qs=(0.25, 0.5, 0.75)) -> Summary:
    """Mean, standard error, and linearly interpolated quantiles."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("summarize needs at least one sample")
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    quantiles = {float(q): float(np.quantile(arr, q)) for q in qs}
    return Summary(mean=float(arr.mean()), se=se, quantiles=quantiles)


@dataclass
class MartingaleDiagnostic:
    """Idleness martingale residual of one LISF trajectory on a grid.

    residual = (observed - compensator + remainder)/sqrt(n), where
    observed sums the clipped idle spells opened at potential epochs with
    rates in set_A, the compensator sums their exact conditional
    expectations given the pre-epoch state, and the remainder restores
    the expected unfinished part of spells still open.
    """

    set_A: BorelSet
    grid: np.ndarray
    residual: np.ndarray
    observed: np.ndarray
    compensator: np.ndarray
    remainder: np.ndarray

    @property
    def terminal(self) -> float:
        return float(self.residual[-1])


def lisf_martingale_residual(traj: Trajectory, set_A: BorelSet, grid=None) -> MartingaleDiagnostic:
    """Evaluate the idleness martingale residual along a grid.

    Requires a potential-stream LISF trajectory with exponential
    interarrivals: memorylessness makes both conditional expectations
    closed form (a server idle in queue position p waits p/lambda more
    in expectation).
    """
    cfg = traj.config
    if cfg.policy != "LISF":
        raise ValueError(f"martingale residual is defined for LISF, got {cfg.policy}")
    if cfg.arrival_law.kind != "exponential":
        raise ValueError("martingale residual needs exponential interarrivals")
    if cfg.construction != "potential_stream":
        raise ValueError("martingale residual needs the potential-stream construction")
    if cfg.lambda_n <= 0:
        raise ValueError("martingale residual needs a positive arrival rate")
    if grid is None:
        grid = uniform_grid(traj.horizon)
    grid = np.asarray(grid, dtype=float)

    n = traj.n
    lam = cfg.lambda_n
    rates = traj.rates
    sum_rates = float(rates.sum())
    in_a = set_A.mask(rates)

    # observed clipped idle spells: episodes opened at potential epochs
    ep_mask = (~traj.ep_initial) & in_a[traj.ep_server]
    obs_start = traj.ep_start[ep_mask]
    obs_end = traj.ep_end[ep_mask]
    observed = np.array(
        [np.clip(np.minimum(obs_end, t) - obs_start, 0.0, None).sum() for t in grid]
    )

    # replay for the compensator and the open-spell remainder
    from collections import deque

    x0 = cfg.x0
    busy0 = min(x0, n)
    idle_q = deque(range(busy0, n))
    initial_idle = bytearray(n)
    for k in range(busy0, n):
        initial_idle[k] = 1
    s_a = float(rates[:busy0][in_a[:busy0]].sum())
    in_a_list = in_a.tolist()
    rate_list = rates.tolist()

    comp = 0.0
    cur_head = x0
    cur_idle = n - busy0
    g = 0
    n_grid = grid.size
    comp_path = np.empty(n_grid)
    rem_path = np.empty(n_grid)
    grid_list = grid.tolist()

    def snapshot(gi: int):
        comp_path[gi] = comp
        rem = 0.0
        for pos, kk in enumerate(idle_q):
            if in_a_list[kk] and not initial_idle[kk]:
                rem += (pos + 1) / lam
        rem_path[gi] = rem

    kinds = traj.kinds.tolist()
    servers = traj.servers.tolist()
    times = traj.times.tolist()
    heads = traj.heads.tolist()
    idles = traj.idles.tolist()
    n_ev = len(kinds)
    for i in range(n_ev):
        t = times[i]
        while g < n_grid and grid_list[g] < t:
            snapshot(g)
            g += 1
        kind = kinds[i]
        k = servers[i]
        if kind == KIND_COMPLETION or kind == KIND_POTENTIAL_NOOP:
            # potential epoch: exact conditional expectation of the spell
            # it may open, given the pre-epoch state
            if cur_head <= n:
                comp += (cur_idle + 1) / lam * s_a / sum_rates
            if kind == KIND_COMPLETION:
                handoff = (
                    i + 1 < n_ev
                    and kinds[i + 1] == KIND_ROUTING
                    and servers[i + 1] == k
                    and times[i + 1] == t
                )
                if not handoff:
                    idle_q.append(k)
                    if in_a_list[k]:
                        s_a -= rate_list[k]
        elif kind == KIND_ROUTING:
            handoff = (
                i > 0
                and kinds[i - 1] == KIND_COMPLETION
                and servers[i - 1] == k
                and times[i - 1] == t
            )
            if not handoff:
                front = idle_q.popleft()
                if front != k:
                    raise AssertionError(
                        f"LISF discipline broken: routed to {k}, longest idle was {front}"
                    )
                initial_idle[k] = 0
                if in_a_list[k]:
                    s_a += rate_list[k]
        cur_head = heads[i]
        cur_idle = idles[i]
    while g < n_grid:
        snapshot(g)
        g += 1

    scale = 1.0 / math.sqrt(n)
    residual = (observed - comp_path + rem_path) * scale
    return MartingaleDiagnostic(
        set_A=set_A,
        grid=grid,
        residual=residual,
        observed=observed * scale,
        compensator=comp_path * scale,
        remainder=rem_path * scale,
    )
