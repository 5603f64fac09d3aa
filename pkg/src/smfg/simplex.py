"""Probability-simplex geometry: points, projection, sampling, empirical measures.

Actions are 1-indexed ``{1..K}`` throughout the public API; internal arrays
are 0-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SimplexPoint:
    """A probability vector over K actions.

    Construction re-normalizes inputs whose sum is within 1e-9 of 1 and
    rejects anything further off; all entries must be non-negative.
    """

    weights: np.ndarray

    def __init__(self, weights):
        w = np.array(weights, dtype=np.float64).ravel()
        if w.size < 1:
            raise ValueError("simplex point needs at least one entry")
        if not np.all(np.isfinite(w)):
            raise ValueError("simplex point entries must be finite")
        if np.any(w < -1e-12):
            raise ValueError("simplex point entries must be non-negative")
        np.maximum(w, 0.0, out=w)
        total = w.sum()
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"entries sum to {total!r}, not 1 within {SUM_TOLERANCE}")
        if abs(total - 1.0) > 1e-12:
            w /= total
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def K(self) -> int:
        return self.weights.size

    def __getitem__(self, action: int) -> float:
        """Probability of 1-indexed action ``a``."""
        if not 1 <= action <= self.K:
            raise IndexError(f"action {action} outside 1..{self.K}")
        return float(self.weights[action - 1])

    def __len__(self) -> int:
        return self.K

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    @staticmethod
    def uniform(k: int) -> "SimplexPoint":
        return SimplexPoint(np.full(k, 1.0 / k))

    @staticmethod
    def one_hot(action: int, k: int) -> "SimplexPoint":
        w = np.zeros(k)
        w[action - 1] = 1.0
        return SimplexPoint(w)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Occupancy counts of N agents over K actions; entries are multiples of 1/N."""

    counts: np.ndarray
    N: int = field(init=False)

    def __init__(self, counts):
        c = np.array(counts, dtype=np.int64).ravel()
        if c.size < 1 or np.any(c < 0):
            raise ValueError("counts must be non-negative integers")
        n = int(c.sum())
        if n < 1:
            raise ValueError("empirical measure needs at least one sample")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "N", n)

    @property
    def K(self) -> int:
        return self.counts.size

    def point(self) -> SimplexPoint:
        return SimplexPoint(self.counts / self.N)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.counts / self.N, dtype=dtype)


def project(v) -> SimplexPoint:
    """Euclidean projection of a K-vector onto the probability simplex.

    Sort-and-threshold algorithm, O(K log K); the result satisfies the KKT
    form x_a = max(v_a - theta, 0) for a single threshold theta.
    """
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size < 1:
        raise ValueError("cannot project an empty vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot project a vector with non-finite entries")
    out = _kernels.project_rows(arr[None, :])[0]
    return SimplexPoint(out)


def sample_action(p: SimplexPoint, rng: np.random.Generator) -> int:
    """Draw a 1-indexed action distributed according to ``p``."""
    w = np.asarray(p, dtype=np.float64)
    u = rng.random(1)
    return int(_kernels.sample_from_rows(w[None, :], u)[0]) + 1


def empirical_measure(actions, k: int) -> EmpiricalMeasure:
    """Occupancy counts of 1-indexed ``actions`` over ``{1..k}``."""
    a = np.asarray(actions, dtype=np.int64).ravel()
    if a.size < 1:
        raise ValueError("need at least one action")
    if np.any(a < 1) or np.any(a > k):
        bad = a[(a < 1) | (a > k)][0]
        raise ValueError(f"action {bad} outside 1..{k}")
    return EmpiricalMeasure(np.bincount(a - 1, minlength=k))


def sample_uniform_points(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points drawn uniformly (flat Dirichlet) from the K-simplex, as rows."""
    return rng.dirichlet(np.ones(k), size=n)
