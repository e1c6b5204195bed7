"""Fairness process of a trajectory: how cumulative idleness is shared
among servers with different rates.

The cumulative idleness measure at time t puts, at each realized rate, a
weight of n^(-1/2) times the total idle time accrued by servers with that
rate on [0, t].  The fairness measure is its normalization once total
idleness is positive, and a placeholder probability measure zeta before
that.  The epsilon-shift replaces the fairness measure by zeta up to the
first time the scaled idleness integral exceeds epsilon, which removes
the singularity at first idleness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import RateDistribution
from .measures import DiscreteMeasure, blind_limit_measure, mean_of_measure
from .policies import as_policy, is_totally_blind
from .simulation import Trajectory

DEFAULT_GRID_FRACTION = 0.01


def uniform_grid(horizon: float, spacing: float | None = None) -> np.ndarray:
    """Uniform sample grid on [0, horizon]; default spacing 0.01*horizon."""
    if spacing is None:
        spacing = DEFAULT_GRID_FRACTION * horizon
    if spacing <= 0:
        raise ValueError(f"grid spacing must be positive, got {spacing}")
    points = max(int(round(horizon / spacing)), 1)
    return np.linspace(0.0, horizon, points + 1)


def cumulative_idleness(traj: Trajectory, t: float) -> DiscreteMeasure:
    """Scaled cumulative idleness by rate on [0, t] (not normalized;
    total equals the scaled aggregate idleness integral)."""
    if not 0 <= t <= traj.horizon:
        raise ValueError(f"t={t} outside [0, {traj.horizon}]")
    dur = np.clip(np.minimum(traj.ep_end, t) - traj.ep_start, 0.0, None)
    scale = 1.0 / math.sqrt(traj.n)
    return DiscreteMeasure.from_atoms(traj.ep_rate, dur * scale)


def fairness_measure(traj: Trajectory, t: float, zeta: DiscreteMeasure) -> DiscreteMeasure:
    """Proportion of cumulative idleness by rate at time t; zeta while no
    idleness has accrued."""
    if not zeta.is_probability():
        raise ValueError(f"zeta must be a probability measure, total={zeta.total}")
    cum = cumulative_idleness(traj, t)
    if cum.total <= 0.0:
        return zeta
    return cum.normalized()


def tau_epsilon(traj: Trajectory, epsilon: float) -> float:
    """First time the integral of the scaled idle count exceeds epsilon,
    computed exactly segment by segment; inf if never on [0, horizon]."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    ts, cum = traj.idle_count_integral_nodes()
    target = epsilon * math.sqrt(traj.n)
    j = int(np.searchsorted(cum, target, side="right"))
    if j >= len(cum):
        return math.inf
    # crossing happens inside segment [ts[j-1], ts[j]]
    slope = (cum[j] - cum[j - 1]) / (ts[j] - ts[j - 1])
    return float(ts[j - 1] + (target - cum[j - 1]) / slope)


@dataclass
class FairnessPath:
    """Fairness measures along a time grid, plus the placeholder and the
    first-idleness time."""

    grid: np.ndarray
    measures: list[DiscreteMeasure]
    tau0: float
    zeta: DiscreteMeasure

    def terminal(self) -> DiscreteMeasure:
        return self.measures[-1]


def fairness_path(traj: Trajectory, zeta: DiscreteMeasure, grid=None) -> FairnessPath:
    """Evaluate the fairness process on a grid (zeta until idleness has
    accrued, the normalized idleness measure afterwards)."""
    if grid is None:
        grid = uniform_grid(traj.horizon)
    grid = np.asarray(grid, dtype=float)
    tau0 = tau_epsilon(traj, 0.0)
    measures = [fairness_measure(traj, float(t), zeta) for t in grid]
    return FairnessPath(grid=grid, measures=measures, tau0=tau0, zeta=zeta)


def shift_epsilon(path: FairnessPath, epsilon: float, traj: Trajectory) -> FairnessPath:
    """Epsilon-shifted path: zeta at grid points up to (and including)
    tau_epsilon, the original measures strictly after."""
    tau = tau_epsilon(traj, epsilon)
    measures = [
        path.zeta if t <= tau else m for t, m in zip(path.grid, path.measures)
    ]
    return FairnessPath(grid=path.grid, measures=measures, tau0=path.tau0, zeta=path.zeta)


def predicted_limit_measure(policy: str, dist: RateDistribution, cells: int = 200) -> DiscreteMeasure:
    """Fairness measure the policy drives the system to as n grows:
    the size-biased rate law for totally blind policies, a point mass at
    the slowest rate for FSF and at the fastest rate for SSF."""
    policy = as_policy(policy)
    if is_totally_blind(policy):
        return blind_limit_measure(dist, cells)
    if policy == "FSF":
        return DiscreteMeasure.dirac(dist.support_min)
    return DiscreteMeasure.dirac(dist.support_max)


def default_zeta(policy: str, dist: RateDistribution) -> DiscreteMeasure:
    """Default placeholder: the policy's own limiting measure, so the
    pre-idleness value agrees with where the process converges.
    Overridable wherever a zeta is accepted."""
    return predicted_limit_measure(policy, dist)


def limit_mean_rate(policy: str, dist: RateDistribution) -> float:
    """Mean of the predicted limit measure; the mean-reversion slope of
    the limiting diffusion on the idle side."""
    return mean_of_measure(predicted_limit_measure(policy, dist))
