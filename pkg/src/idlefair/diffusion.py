"""Limiting one-dimensional diffusion with random drift.

The scaled headcount limit solves

    xi(t) = xi0 + sigma*W(t) + beta*t + m*int_0^t xi^-(s) ds
                 - gamma*int_0^t xi^+(s) ds,

with sigma = mu_bar*sqrt(ca2 + 1), drift intercept beta = lambda_hat
minus a centered Gaussian with the rate distribution's variance (the
environment randomness), and m the mean of the policy's limiting
fairness measure.  Here ``ca2`` is the squared arrival coefficient of
variation on the service time scale: for a mean-1 interarrival law with
squared coefficient of variation c, ca2 = c / mu_bar**2.

Integration is Euler-Maruyama with a fixed step; the drift is piecewise
linear and globally Lipschitz, so first order is enough at desk scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import RateDistribution
from .rng import RngStream


def arrival_cv2(law_ca2: float, mu_bar: float) -> float:
    """Convert an interarrival law's squared CV to the diffusion's ca2."""
    return law_ca2 / mu_bar**2


@dataclass(frozen=True)
class SdeParams:
    """Coefficients and discretization of one diffusion path."""

    xi0: float
    mu_bar: float
    ca2: float
    beta: float
    m: float
    gamma: float
    dt: float
    horizon: float
    seed: RngStream = RngStream(0, 0)

    def __post_init__(self):
        if self.dt <= 0 or self.dt > self.horizon / 100.0:
            raise ValueError(
                f"dt must be in (0, horizon/100], got dt={self.dt}, horizon={self.horizon}"
            )
        if self.sigma <= 0:
            raise ValueError(f"diffusion coefficient must be positive, got {self.sigma}")

    @property
    def sigma(self) -> float:
        return self.mu_bar * math.sqrt(self.ca2 + 1.0)

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass
class SdePath:
    """One discretized sample path."""

    times: np.ndarray
    values: np.ndarray

    def terminal(self) -> float:
        return float(self.values[-1])


def default_dt(horizon: float) -> float:
    return horizon / 2000.0


def sample_beta(
    lambda_hat: float,
    dist: RateDistribution,
    stream: RngStream | None = None,
    size: int | None = None,
    rates=None,
):
    """Drift intercept beta.

    Unconditional mode (``rates`` omitted) draws lambda_hat minus a
    centered Gaussian with variance var(rate distribution).  With
    ``rates`` given, beta is computed from that realized environment:
    lambda_hat - (sum(rates) - n*mean)/sqrt(n), pairing the diffusion
    with a matched simulation replication.
    """
    if rates is not None:
        rates = np.asarray(rates, dtype=float)
        if rates.size == 0:
            raise ValueError("from-rates beta needs a nonempty rate realization")
        n = rates.size
        return float(lambda_hat - (rates.sum() - n * dist.mean) / math.sqrt(n))
    if stream is None:
        raise ValueError("unconditional beta sampling needs a stream")
    sd = math.sqrt(dist.variance)
    gen = stream.generator()
    if size is None:
        return float(lambda_hat - sd * gen.standard_normal())
    return lambda_hat - sd * gen.standard_normal(size)


def integrate_sde(params: SdeParams, zs: np.ndarray | None = None) -> SdePath:
    """Euler-Maruyama path; ``zs`` injects the standard normal increments
    (zeros give the noise-free drift ODE)."""
    steps = params.steps
    if zs is None:
        zs = params.seed.generator().standard_normal(steps)
    else:
        zs = np.asarray(zs, dtype=float)
        if zs.size != steps:
            raise ValueError(f"need {steps} noise increments, got {zs.size}")
    dt = params.dt
    noise_scale = params.sigma * math.sqrt(dt)
    beta, m, gamma = params.beta, params.m, params.gamma
    values = np.empty(steps + 1)
    x = params.xi0
    values[0] = x
    zl = zs.tolist()
    for j in range(steps):
        neg = -x if x < 0 else 0.0
        pos = x if x > 0 else 0.0
        x = x + (beta + m * neg - gamma * pos) * dt + noise_scale * zl[j]
        values[j + 1] = x
    times = np.linspace(0.0, steps * dt, steps + 1)
    return SdePath(times=times, values=values)


def terminal_law(
    params: SdeParams, beta_samples, n_paths: int | None = None,
    zs: np.ndarray | None = None,
) -> np.ndarray:
    """Terminal values xi(horizon), one path per drift sample, with
    independent Brownian increments (vectorized across paths).

    ``zs`` injects the (steps, n_paths) noise matrix; zeros give the
    per-path drift ODEs.
    """
    betas = np.asarray(beta_samples, dtype=float)
    if n_paths is None:
        n_paths = betas.size
    if betas.size != n_paths:
        raise ValueError(f"need one beta per path: {betas.size} betas, {n_paths} paths")
    steps = params.steps
    dt = params.dt
    noise_scale = params.sigma * math.sqrt(dt)
    if zs is not None:
        zs = np.asarray(zs, dtype=float)
        if zs.shape != (steps, n_paths):
            raise ValueError(f"need noise of shape {(steps, n_paths)}, got {zs.shape}")
        gen = None
    else:
        gen = params.seed.generator()
    m, gamma = params.m, params.gamma
    x = np.full(n_paths, params.xi0)
    for j in range(steps):
        drift = betas + m * np.maximum(-x, 0.0) - gamma * np.maximum(x, 0.0)
        dw = zs[j] if gen is None else gen.standard_normal(n_paths)
        x = x + drift * dt + noise_scale * dw
    return x
