"""Empirical distribution utilities: rank counts, the DKW margin and the constraint grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EcdfView:
    """Read-only view of a sorted sample supporting R_n(t) and F_n(t) = R_n(t) / n."""

    x: np.ndarray

    @property
    def n(self) -> int:
        return self.x.size

    def rank_count(self, t):
        """Number of observations <= t (scalar or array ``t``)."""
        counts = np.searchsorted(self.x, t, side="right")
        return int(counts) if np.ndim(counts) == 0 else counts

    def ecdf(self, t):
        return np.asarray(self.rank_count(t)) / self.n


def rank_count(view: EcdfView, t):
    return view.rank_count(t)


def epsilon_n(n: int) -> float:
    """DKW margin sqrt(ln n / n)."""
    if n < 2:
        raise ValueError(f"epsilon_n needs n >= 2, got {n}")
    return math.sqrt(math.log(n) / n)


def grid_size(n: int) -> int:
    return int(math.floor(math.log(n) ** 2))


@dataclass(frozen=True)
class ConstraintGrid:
    points: np.ndarray

    @property
    def size(self) -> int:
        return self.points.size


def build_grid(view: EcdfView) -> ConstraintGrid:
    """floor((ln n)^2) equally spaced points from min x to max x, both included."""
    if view.n < 2:
        raise ValueError("grid needs at least two observations")
    lo, hi = float(view.x[0]), float(view.x[-1])
    if not lo < hi:
        raise ValueError("degenerate sample: all observations are equal")
    size = grid_size(view.n)
    pts = np.linspace(lo, hi, size)
    if size >= 2:
        # linspace can round the last point; the endpoints must be exact.
        pts[0], pts[-1] = lo, hi
    return ConstraintGrid(pts)


def ks_distance(view: EcdfView, cdf_at_x: np.ndarray) -> float:
    """sup_t |F_n(t) - Q(t)| for continuous Q, given Q evaluated at the sorted sample."""
    n = view.n
    upper = np.searchsorted(view.x, view.x, side="right") / n
    lower = np.searchsorted(view.x, view.x, side="left") / n
    return float(max(np.max(upper - cdf_at_x), np.max(cdf_at_x - lower)))
