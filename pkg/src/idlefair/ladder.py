"""Sequences of systems under square-root heavy-traffic staffing.

A ladder fixes the model primitives and a list of server counts n; each
level gets arrival rate n*mean_rate + lambda_hat*sqrt(n) and initial
headcount round(n + xi0*sqrt(n)), so the scaled processes are comparable
across n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import InterarrivalLaw, RateDistribution, sample_rates
from .policies import as_policy
from .rng import RngStream
from .simulation import SystemConfig, Trajectory
from .fairness import uniform_grid

# substream label reserved for a frozen per-level rate realization
_FROZEN_RATES_LABEL = 1_000_002


@dataclass(frozen=True)
class LadderSpec:
    """Parameterization of one ladder of systems."""

    n_values: tuple[int, ...]
    lambda_hat: float
    rate_dist: RateDistribution
    gamma: float
    horizon: float
    arrival_law: InterarrivalLaw = field(default_factory=InterarrivalLaw.exponential)
    xi0: float = 0.0
    reps: int = 100
    policy: str = "LISF"
    construction: str = "potential_stream"
    base_seed: RngStream = RngStream(0, 0)
    freeze_rates: bool = False

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_values)
        object.__setattr__(self, "n_values", ns)
        if not ns or any(n < 1 for n in ns) or list(ns) != sorted(set(ns)):
            raise ValueError(f"n_values must be an increasing list of positive counts, got {ns}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        object.__setattr__(self, "policy", as_policy(self.policy))
        for n in ns:
            if self.arrival_rate(n) <= 0:
                raise ValueError(
                    f"lambda_hat={self.lambda_hat} gives arrival rate "
                    f"{self.arrival_rate(n)} <= 0 at n={n}"
                )

    def arrival_rate(self, n: int) -> float:
        return n * self.rate_dist.mean + self.lambda_hat * math.sqrt(n)

    def initial_headcount(self, n: int) -> int:
        return max(0, int(round(n + self.xi0 * math.sqrt(n))))

    def level_stream(self, level: int) -> RngStream:
        return self.base_seed.substream(level)

    def rep_stream(self, level: int, rep: int) -> RngStream:
        return self.level_stream(level).substream(rep)


def build_ladder(spec: LadderSpec) -> list[SystemConfig]:
    """One SystemConfig per (n, replication), with derived stream ids.

    Rates are independently re-sampled per replication unless
    ``freeze_rates`` pins one realization per level.
    """
    configs = []
    for level, n in enumerate(spec.n_values):
        frozen = None
        if spec.freeze_rates:
            frozen = tuple(
                sample_rates(
                    spec.level_stream(level).substream(_FROZEN_RATES_LABEL),
                    spec.rate_dist,
                    n,
                ).tolist()
            )
        for rep in range(spec.reps):
            configs.append(
                SystemConfig(
                    n=n,
                    lambda_n=spec.arrival_rate(n),
                    rate_dist=spec.rate_dist,
                    gamma=spec.gamma,
                    horizon=spec.horizon,
                    arrival_law=spec.arrival_law,
                    rates=frozen,
                    x0=spec.initial_headcount(n),
                    policy=spec.policy,
                    construction=spec.construction,
                    seed=spec.rep_stream(level, rep),
                )
            )
    return configs


@dataclass
class ScaledPath:
    """Diffusion-scaled processes of one trajectory on a grid, plus the
    path suprema and the normalized idle service effort."""

    n: int
    grid: np.ndarray
    xhat: np.ndarray
    ihat: np.ndarray
    ibar: np.ndarray
    sup_ihat: float
    sup_ibar: float
    idle_effort: float


def scale(traj: Trajectory, n: int | None = None, grid=None) -> ScaledPath:
    """Diffusion scaling of one complete trajectory.

    Suprema are taken over the full event path, not just the grid.
    """
    if n is None:
        n = traj.n
    if grid is None:
        grid = uniform_grid(traj.horizon)
    grid = np.asarray(grid, dtype=float)
    sqrt_n = math.sqrt(n)
    heads = traj.headcount_at(grid)
    idles = traj.idle_count_at(grid)
    if np.any(idles != np.maximum(n - heads, 0)):
        raise AssertionError("scaled non-idling identity broken on the grid")
    sup_idle = max(
        traj.initial_idle(), int(traj.idles.max()) if traj.idles.size else 0
    )
    idle_effort = float(np.dot(traj.rates, traj.cum_idle_per_server())) / n
    return ScaledPath(
        n=n,
        grid=grid,
        xhat=(heads - n) / sqrt_n,
        ihat=idles / sqrt_n,
        ibar=idles / n,
        sup_ihat=sup_idle / sqrt_n,
        sup_ibar=sup_idle / n,
        idle_effort=idle_effort,
    )


def idleness_scaling_report(paths_by_n: dict[int, list[ScaledPath]]) -> list[dict]:
    """Per-level quartile summary of the idleness statistics with ratio
    diagnostics between consecutive levels.

    Fewer than 30 replications at a level is flagged in the row, not
    fatal; with at least two levels the sup_ibar medians should shrink
    roughly like 1/sqrt(n) while sup_ihat medians stay comparable.
    """
    if len(paths_by_n) < 2:
        raise ValueError("scaling report needs at least two ladder levels")
    rows = []
    prev = None
    for n in sorted(paths_by_n):
        paths = paths_by_n[n]
        row = {"n": n, "reps": len(paths), "flag": "low_reps" if len(paths) < 30 else ""}
        for name in ("sup_ihat", "sup_ibar", "idle_effort"):
            vals = np.asarray([getattr(p, name) for p in paths])
            row[f"{name}_q25"] = float(np.quantile(vals, 0.25))
            row[f"{name}_median"] = float(np.median(vals))
            row[f"{name}_q75"] = float(np.quantile(vals, 0.75))
        if prev is not None:
            for name in ("sup_ihat", "sup_ibar", "idle_effort"):
                denom = prev[f"{name}_median"]
                row[f"{name}_median_ratio"] = (
                    row[f"{name}_median"] / denom if denom > 0 else math.inf
                )
            row["sqrt_ratio_predicted"] = math.sqrt(prev["n"] / n)
        prev = row
        rows.append(row)
    return rows
