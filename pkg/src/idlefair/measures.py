"""Finitely supported measures on the positive half-line.

These are the common currency of the fairness analysis: realized rate
histograms, cumulative idleness by rate, fairness proportions, and their
predicted limits are all finitely supported measures with nonnegative
weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-12


@dataclass(frozen=True)
class BorelSet:
    """Finite union of half-open intervals [lo, hi) plus isolated points.

    Expressive enough for every set the analysis needs: tail sets
    [a, inf), rate classes of a discrete distribution, and complements.
    """

    intervals: tuple[tuple[float, float], ...] = ()
    points: tuple[float, ...] = ()
    negated: bool = False

    @staticmethod
    def point(x: float) -> "BorelSet":
        return BorelSet(points=(float(x),))

    @staticmethod
    def of_points(*xs: float) -> "BorelSet":
        return BorelSet(points=tuple(float(x) for x in xs))

    @staticmethod
    def interval(lo: float, hi: float) -> "BorelSet":
        if not lo < hi:
            raise ValueError(f"interval needs lo < hi, got [{lo}, {hi})")
        return BorelSet(intervals=((float(lo), float(hi)),))

    @staticmethod
    def at_least(lo: float) -> "BorelSet":
        return BorelSet(intervals=((float(lo), np.inf),))

    @staticmethod
    def everything() -> "BorelSet":
        return BorelSet(intervals=((0.0, np.inf),))

    def complement(self) -> "BorelSet":
        return BorelSet(self.intervals, self.points, not self.negated)

    def mask(self, xs) -> np.ndarray:
        """Boolean membership for an array of locations."""
        xs = np.asarray(xs)
        inside = np.zeros(xs.shape, dtype=bool)
        for lo, hi in self.intervals:
            inside |= (xs >= lo) & (xs < hi)
        for p in self.points:
            inside |= xs == p
        return ~inside if self.negated else inside

    def contains(self, x: float) -> bool:
        return bool(self.mask(np.asarray([x]))[0])


@dataclass(frozen=True)
class DiscreteMeasure:
    """Canonical finitely supported measure: strictly increasing atom
    locations, nonnegative weights, equal locations merged."""

    locations: np.ndarray
    weights: np.ndarray

    @staticmethod
    def from_atoms(locations, weights) -> "DiscreteMeasure":
        locs = np.asarray(locations, dtype=float)
        wts = np.asarray(weights, dtype=float)
        if locs.shape != wts.shape or locs.ndim != 1:
            raise ValueError("locations and weights must be 1-d arrays of equal length")
        if np.any(wts < 0):
            raise ValueError("measure weights must be nonnegative")
        if locs.size == 0:
            return DiscreteMeasure(locs, wts)
        order = np.argsort(locs, kind="stable")
        locs, wts = locs[order], wts[order]
        uniq, inverse = np.unique(locs, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, wts)
        keep = merged > 0
        return DiscreteMeasure(uniq[keep], merged[keep])

    @staticmethod
    def zero() -> "DiscreteMeasure":
        return DiscreteMeasure(np.empty(0), np.empty(0))

    @staticmethod
    def dirac(location: float) -> "DiscreteMeasure":
        return DiscreteMeasure(np.asarray([float(location)]), np.asarray([1.0]))

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: float = PROB_TOL) -> bool:
        return abs(self.total - 1.0) <= tol

    def mass(self, region: BorelSet) -> float:
        """Measure of a Borel set (sum of atom weights inside it)."""
        if self.locations.size == 0:
            return 0.0
        return float(self.weights[region.mask(self.locations)].sum())

    def normalized(self) -> "DiscreteMeasure":
        t = self.total
        if t <= 0:
            raise ValueError("cannot normalize a zero measure")
        return DiscreteMeasure(self.locations, self.weights / t)

    def atom_weight(self, location: float) -> float:
        idx = np.searchsorted(self.locations, location)
        if idx < self.locations.size and self.locations[idx] == location:
            return float(self.weights[idx])
        return 0.0

    def as_pairs(self) -> list[tuple[float, float]]:
        return [(float(l), float(w)) for l, w in zip(self.locations, self.weights)]


def mean_of_measure(m: DiscreteMeasure) -> float:
    """Expected value of a random variable with law m."""
    if not m.is_probability():
        raise ValueError(f"mean_of_measure needs a probability measure, total={m.total}")
    return float(np.dot(m.locations, m.weights))


def average_measures(measures: list[DiscreteMeasure]) -> DiscreteMeasure:
    """Pointwise average of finitely many measures (atom-wise union)."""
    if not measures:
        raise ValueError("need at least one measure")
    locs = np.concatenate([m.locations for m in measures])
    wts = np.concatenate([m.weights / len(measures) for m in measures])
    return DiscreteMeasure.from_atoms(locs, wts)


def rate_distribution_measure(dist, cells: int = 200) -> DiscreteMeasure:
    """The rate law F as a discrete measure; continuous kinds are binned
    on a regular grid of `cells` cells with atoms at cell midpoints."""
    atoms = dist.atoms()
    if atoms is not None:
        locs, wts = zip(*atoms)
        return DiscreteMeasure.from_atoms(locs, wts)
    a, b = dist.support_min, dist.support_max
    edges = np.linspace(a, b, cells + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    wts = np.diff(edges) / (b - a)
    return DiscreteMeasure.from_atoms(mids, wts)


def blind_limit_measure(dist, cells: int = 200) -> DiscreteMeasure:
    """Size-biased version of the rate law: weight at mu proportional to
    mu times its probability.  This is the predicted terminal fairness
    measure for totally blind routing."""
    base = rate_distribution_measure(dist, cells)
    biased = base.locations * base.weights
    return DiscreteMeasure(base.locations, biased / biased.sum())


def wasserstein1(m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    """Exact W1 between finitely supported probability measures: the
    integral of |CDF1 - CDF2| over the union support interval."""
    for m in (m1, m2):
        if not m.is_probability():
            raise ValueError(f"wasserstein1 needs probability measures, total={m.total}")
    grid = np.union1d(m1.locations, m2.locations)
    if grid.size <= 1:
        return 0.0
    cdf1 = np.cumsum(_on_grid(m1, grid))
    cdf2 = np.cumsum(_on_grid(m2, grid))
    gaps = np.diff(grid)
    return float(np.sum(np.abs(cdf1[:-1] - cdf2[:-1]) * gaps))


def _on_grid(m: DiscreteMeasure, grid: np.ndarray) -> np.ndarray:
    weights = np.zeros(grid.size)
    weights[np.searchsorted(grid, m.locations)] = m.weights
    return weights
