"""Euclidean primitives on the unit cube: states, balls, polylines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rrtpc.errors import UsageError


def as_state(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a read-only 1-D float64 array, checking finiteness."""
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise UsageError(f"expected a state of dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"state has non-finite coordinates: {arr}")
    arr.setflags(write=False)
    return arr


def distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return math.sqrt(float(np.dot(a - b, a - b)))


def log_ball_volume(d: int, r: float) -> float:
    """Natural log of the Lebesgue measure of a radius-``r`` ball in R^d."""
    if d < 1 or int(d) != d:
        raise UsageError(f"dimension must be a positive integer, got {d}")
    if not r > 0:
        raise UsageError(f"radius must be positive, got {r}")
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0) + d * math.log(r)


def ball_volume(d: int, r: float) -> float:
    return math.exp(log_ball_volume(d, r))


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_state(self.center))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise UsageError(f"ball radius must be positive and finite, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, x, closed: bool = False) -> bool:
        """Membership in the open ball (or the closed one with ``closed=True``)."""
        dist = distance(self.center, x)
        return dist <= self.radius if closed else dist < self.radius


class PathPolyline:
    """Piecewise-linear path through at least two waypoints."""

    def __init__(self, waypoints):
        pts = np.array(waypoints, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise UsageError("a polyline needs at least two waypoints")
        if not np.all(np.isfinite(pts)):
            raise UsageError("polyline waypoints must be finite")
        seg = np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=1))
        if np.any(seg == 0.0):
            raise UsageError("consecutive waypoints must be distinct")
        pts.setflags(write=False)
        self.waypoints = pts
        self._cumulative = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def dim(self) -> int:
        return self.waypoints.shape[1]

    @property
    def length(self) -> float:
        return float(self._cumulative[-1])

    @property
    def cumulative(self) -> np.ndarray:
        return self._cumulative

    def point_at(self, s: float) -> np.ndarray:
        total = self.length
        if not (0.0 <= s <= total):
            raise UsageError(f"arc length {s} outside [0, {total}]")
        if s == total:
            return self.waypoints[-1].copy()
        i = int(np.searchsorted(self._cumulative, s, side="right")) - 1
        seg_len = self._cumulative[i + 1] - self._cumulative[i]
        frac = (s - self._cumulative[i]) / seg_len
        a, b = self.waypoints[i], self.waypoints[i + 1]
        return a + frac * (b - a)

    def __len__(self):
        return self.waypoints.shape[0]

    def __repr__(self):
        return f"PathPolyline({len(self)} waypoints, length={self.length:.6g})"


def arc_length(path: PathPolyline) -> float:
    return path.length


def point_at_arclength(path: PathPolyline, s: float) -> np.ndarray:
    return path.point_at(s)
