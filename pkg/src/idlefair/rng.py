"""Deterministic, splittable random number streams.

Every stochastic ingredient of a simulation (arrivals, potential
completions, splitting uniforms, patience, ...) owns its own stream so
replications can run in parallel and policies can be compared under
common random numbers.  A stream is identified by ``(seed, stream_id)``
and is reproducible: the same pair always yields the same sample
sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Labels for the per-replication component streams.  Streams are derived
# with ``substream``, so any module deriving from a replication stream
# must pick its label from this registry to avoid reuse.
ARRIVALS = 0
POTENTIAL = 1
SPLITTING = 2
PATIENCE = 3
ROUTING = 4
RATES = 5
SERVICE = 6
BROWNIAN = 7
DRIFT = 8

_BLOCK = 8192


@dataclass(frozen=True)
class RngStream:
    """Value-like handle for one reproducible random stream.

    A stream is named by ``(seed, stream_id)`` plus an optional
    derivation ``path`` built with substream().  The name feeds a seed
    sequence as fixed-width words (stream_id split into two 32-bit
    words, one word per path label), so distinct names can never map to
    the same generator state.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.stream_id < 2**64:
            raise ValueError(f"stream_id must be a 64-bit unsigned integer, got {self.stream_id}")
        for label in self.path:
            if not 0 <= label < 2**32:
                raise ValueError(f"substream label out of range: {label}")

    def substream(self, label: int) -> "RngStream":
        """Derive the stream for one component or replication; chains of
        derivations may nest arbitrarily deep."""
        if not 0 <= label < 2**32:
            raise ValueError(f"substream label out of range: {label}")
        return RngStream(self.seed, self.stream_id, self.path + (label,))

    def generator(self) -> np.random.Generator:
        """Fresh numpy generator positioned at the start of this stream."""
        key = (self.stream_id & 0xFFFFFFFF, self.stream_id >> 32, *self.path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))


def sample_uniforms(stream: RngStream, size: int) -> np.ndarray:
    """``size`` i.i.d. uniforms on [0, 1)."""
    return stream.generator().random(size)


def exponential_from_uniform(u, rate: float):
    """Inverse-CDF transform of uniforms on [0,1); maps 0 to 0 and never
    evaluates log(0)."""
    return -np.log1p(-np.asarray(u)) / rate


def sample_exponential(stream: RngStream, rate: float, size: int | None = None):
    """Exp(rate) samples via inverse CDF on open-interval uniforms."""
    if rate <= 0:
        raise ValueError(f"exponential rate must be positive, got {rate}")
    gen = stream.generator()
    if size is None:
        return float(-math.log1p(-gen.random()) / rate)
    return exponential_from_uniform(gen.random(size), rate)


class UniformSource:
    """Sequential uniform draws from one stream, generated in blocks.

    Block generation only batches the draws; the sample sequence is
    identical to repeated single draws from the same generator.
    """

    __slots__ = ("_gen", "_buf", "_i")

    def __init__(self, stream: RngStream):
        self._gen = stream.generator()
        self._buf: list[float] = []
        self._i = 0

    def next(self) -> float:
        i = self._i
        buf = self._buf
        if i >= len(buf):
            buf = self._gen.random(_BLOCK).tolist()
            self._buf = buf
            i = 0
        self._i = i + 1
        return buf[i]


class ExponentialSource:
    """Sequential Exp(rate) draws from one stream, generated in blocks."""

    __slots__ = ("_gen", "_rate", "_buf", "_i")

    def __init__(self, stream: RngStream, rate: float):
        if rate <= 0:
            raise ValueError(f"exponential rate must be positive, got {rate}")
        self._gen = stream.generator()
        self._rate = rate
        self._buf: list[float] = []
        self._i = 0

    def next(self) -> float:
        i = self._i
        buf = self._buf
        if i >= len(buf):
            buf = (-np.log1p(-self._gen.random(_BLOCK)) / self._rate).tolist()
            self._buf = buf
            i = 0
        self._i = i + 1
        return buf[i]
