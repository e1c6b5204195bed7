"""Interarrival laws and service-rate distributions.

Interarrival variables are normalized to mean 1; the system arrival rate
enters later as a time scale.  Service-rate distributions are required to
have bounded positive support, and carry their analytic moments so that
downstream formulas (size-biased limits, diffusion drift variance) never
need Monte Carlo.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream, exponential_from_uniform


@dataclass(frozen=True)
class InterarrivalLaw:
    """Law of the mean-1 renewal increments driving arrivals.

    ``ca2`` is the squared coefficient of variation of the increments
    (equal to their variance since the mean is 1).
    """

    kind: str
    params: tuple = ()
    ca2: float = field(default=1.0)

    @property
    def mean(self) -> float:
        # normalization invariant; factories reject anything else
        return 1.0

    @staticmethod
    def exponential() -> "InterarrivalLaw":
        return InterarrivalLaw("exponential", (), 1.0)

    @staticmethod
    def deterministic() -> "InterarrivalLaw":
        return InterarrivalLaw("deterministic", (), 0.0)

    @staticmethod
    def erlang(k: int) -> "InterarrivalLaw":
        if not (isinstance(k, int) and k >= 1):
            raise ValueError(f"erlang shape k must be a positive integer, got {k}")
        return InterarrivalLaw("erlang", (k,), 1.0 / k)

    @staticmethod
    def hyperexponential(p: float, r1: float, r2: float) -> "InterarrivalLaw":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"hyperexponential branch probability must be in [0,1], got {p}")
        if r1 <= 0 or r2 <= 0:
            raise ValueError(f"hyperexponential rates must be positive, got {r1}, {r2}")
        mean = p / r1 + (1.0 - p) / r2
        if abs(mean - 1.0) > 1e-12:
            raise ValueError(
                f"hyperexponential(p={p}, r1={r1}, r2={r2}) has mean {mean}; "
                "interarrival laws must have mean 1"
            )
        second = 2.0 * p / r1**2 + 2.0 * (1.0 - p) / r2**2
        return InterarrivalLaw("hyperexponential", (p, r1, r2), second - 1.0)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "erlang":
            out["k"] = self.params[0]
        elif self.kind == "hyperexponential":
            out["p"], out["r1"], out["r2"] = self.params
        return out

    @staticmethod
    def from_dict(d: dict) -> "InterarrivalLaw":
        kind = d.get("kind")
        if kind == "exponential":
            return InterarrivalLaw.exponential()
        if kind == "deterministic":
            return InterarrivalLaw.deterministic()
        if kind == "erlang":
            return InterarrivalLaw.erlang(int(d["k"]))
        if kind == "hyperexponential":
            return InterarrivalLaw.hyperexponential(float(d["p"]), float(d["r1"]), float(d["r2"]))
        raise ValueError(f"unknown interarrival kind: {kind!r}")


def sample_interarrival(stream: RngStream, law: InterarrivalLaw, size: int | None = None):
    """Mean-1 renewal increments; scale by 1/arrival-rate to get clock times."""
    scalar = size is None
    n = 1 if scalar else size
    gen = stream.generator()
    if law.kind == "deterministic":
        out = np.ones(n)
    elif law.kind == "exponential":
        out = exponential_from_uniform(gen.random(n), 1.0)
    elif law.kind == "erlang":
        k = law.params[0]
        out = gen.gamma(shape=k, scale=1.0 / k, size=n)
    elif law.kind == "hyperexponential":
        p, r1, r2 = law.params
        branch = gen.random(n)
        rate = np.where(branch < p, r1, r2)
        out = exponential_from_uniform(gen.random(n), 1.0) / rate
    else:
        raise ValueError(f"unknown interarrival kind: {law.kind!r}")
    return float(out[0]) if scalar else out


class InterarrivalSource:
    """Sequential interarrival draws for the event loop, block-generated."""

    __slots__ = ("_gen", "_law", "_buf", "_i")
    _BLOCK = 8192

    def __init__(self, stream: RngStream, law: InterarrivalLaw):
        self._gen = stream.generator()
        self._law = law
        self._buf: list[float] = []
        self._i = 0

    def _refill(self) -> list[float]:
        gen, law, n = self._gen, self._law, self._BLOCK
        if law.kind == "deterministic":
            buf = [1.0] * n
        elif law.kind == "exponential":
            buf = (-np.log1p(-gen.random(n))).tolist()
        elif law.kind == "erlang":
            k = law.params[0]
            buf = gen.gamma(shape=k, scale=1.0 / k, size=n).tolist()
        else:
            p, r1, r2 = law.params
            rate = np.where(gen.random(n) < p, r1, r2)
            buf = (-np.log1p(-gen.random(n)) / rate).tolist()
        return buf

    def next(self) -> float:
        i = self._i
        buf = self._buf
        if i >= len(buf):
            buf = self._refill()
            self._buf = buf
            i = 0
        self._i = i + 1
        return buf[i]


@dataclass(frozen=True)
class RateDistribution:
    """Bounded-support distribution of the i.i.d. server rates.

    Unbounded supports are rejected by construction; every factory fills
    exact analytic moments.
    """

    kind: str
    params: tuple
    support_min: float
    support_max: float
    mean: float
    second_moment: float

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    @staticmethod
    def point(mu: float) -> "RateDistribution":
        if mu <= 0:
            raise ValueError(f"point rate must be positive, got {mu}")
        return RateDistribution("point", (mu,), mu, mu, mu, mu**2)

    @staticmethod
    def two_point(mu1: float, p1: float, mu2: float) -> "RateDistribution":
        if mu1 <= 0 or mu2 <= 0:
            raise ValueError(f"two_point rates must be positive, got {mu1}, {mu2}")
        if not 0.0 <= p1 <= 1.0:
            raise ValueError(f"two_point probability p1 must be in [0,1], got {p1}")
        mean = p1 * mu1 + (1 - p1) * mu2
        second = p1 * mu1**2 + (1 - p1) * mu2**2
        return RateDistribution(
            "two_point", (mu1, p1, mu2), min(mu1, mu2), max(mu1, mu2), mean, second
        )

    @staticmethod
    def uniform(a: float, b: float) -> "RateDistribution":
        if not 0 < a <= b:
            raise ValueError(f"uniform support must satisfy 0 < a <= b, got [{a}, {b}]")
        mean = 0.5 * (a + b)
        second = (a * a + a * b + b * b) / 3.0
        return RateDistribution("uniform", (a, b), a, b, mean, second)

    @staticmethod
    def discrete(atoms: list[tuple[float, float]]) -> "RateDistribution":
        if not atoms:
            raise ValueError("discrete rate distribution needs at least one atom")
        merged: dict[float, float] = {}
        for mu, p in atoms:
            if mu <= 0:
                raise ValueError(f"discrete rate must be positive, got {mu}")
            if p < 0:
                raise ValueError(f"discrete probability must be nonnegative, got {p}")
            merged[float(mu)] = merged.get(float(mu), 0.0) + float(p)
        total = sum(merged.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"discrete probabilities must sum to 1, got {total}")
        locs = sorted(merged)
        probs = tuple(merged[mu] / total for mu in locs)
        mean = sum(mu * p for mu, p in zip(locs, probs))
        second = sum(mu * mu * p for mu, p in zip(locs, probs))
        return RateDistribution(
            "discrete", (tuple(locs), probs), locs[0], locs[-1], mean, second
        )

    def atoms(self) -> list[tuple[float, float]] | None:
        """(location, probability) pairs, or None for continuous kinds."""
        if self.kind == "point":
            return [(self.params[0], 1.0)]
        if self.kind == "two_point":
            mu1, p1, mu2 = self.params
            pairs: dict[float, float] = {}
            pairs[mu1] = pairs.get(mu1, 0.0) + p1
            pairs[mu2] = pairs.get(mu2, 0.0) + (1 - p1)
            return sorted(pairs.items())
        if self.kind == "discrete":
            locs, probs = self.params
            return list(zip(locs, probs))
        return None

    def to_dict(self) -> dict:
        if self.kind == "point":
            return {"kind": "point", "mu": self.params[0]}
        if self.kind == "two_point":
            mu1, p1, mu2 = self.params
            return {"kind": "two_point", "mu1": mu1, "p1": p1, "mu2": mu2}
        if self.kind == "uniform":
            a, b = self.params
            return {"kind": "uniform", "a": a, "b": b}
        locs, probs = self.params
        return {"kind": "discrete", "atoms": [[mu, p] for mu, p in zip(locs, probs)]}

    @staticmethod
    def from_dict(d: dict) -> "RateDistribution":
        kind = d.get("kind")
        if kind == "point":
            return RateDistribution.point(float(d["mu"]))
        if kind == "two_point":
            return RateDistribution.two_point(float(d["mu1"]), float(d["p1"]), float(d["mu2"]))
        if kind == "uniform":
            return RateDistribution.uniform(float(d["a"]), float(d["b"]))
        if kind == "discrete":
            return RateDistribution.discrete([(float(mu), float(p)) for mu, p in d["atoms"]])
        raise ValueError(f"unknown rate distribution kind: {kind!r}")


def sample_rates(stream: RngStream, dist: RateDistribution, n: int) -> np.ndarray:
    """n i.i.d. rate draws, frozen for the lifetime of one system."""
    if n < 1:
        raise ValueError(f"need at least one server, got n={n}")
    gen = stream.generator()
    if dist.kind == "point":
        return np.full(n, dist.params[0])
    if dist.kind == "two_point":
        mu1, p1, mu2 = dist.params
        return np.where(gen.random(n) < p1, mu1, mu2)
    if dist.kind == "uniform":
        a, b = dist.params
        return a + (b - a) * gen.random(n)
    locs, probs = dist.params
    cum = np.cumsum(probs)
    idx = np.searchsorted(cum, gen.random(n), side="right")
    return np.asarray(locs)[np.minimum(idx, len(locs) - 1)]
