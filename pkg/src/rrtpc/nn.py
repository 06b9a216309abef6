"""Exact Euclidean nearest-neighbor index over tree vertices.

Points get ids in insertion order. Ties are broken toward the smallest id so
planner runs are reproducible. The accelerated path keeps a static k-d tree
(scipy's cKDTree) over a prefix of the points plus a linearly scanned tail,
and rebuilds the tree when the point count doubles or the tail outgrows
``tail_cap``. Candidate distances are always recomputed with the same
arithmetic as :meth:`PointIndex.nearest_linear`, so both paths agree exactly.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from rrtpc.errors import UsageError

_MIN_TREE = 64
_REL_SLACK = 1e-9


class PointIndex:
    def __init__(self, dim: int, accelerated: bool = True, tail_cap: int = 512):
        if dim < 1:
            raise UsageError("dimension must be positive")
        self.dim = dim
        self.accelerated = accelerated
        self.tail_cap = tail_cap
        self._pts = np.empty((64, dim))
        self._n = 0
        self._tree = None
        self._n_tree = 0

    def __len__(self):
        return self._n

    @property
    def points(self) -> np.ndarray:
        view = self._pts[:self._n]
        view.flags.writeable = False
        return view

    def insert(self, x) -> int:
        if len(x) != self.dim:
            raise UsageError(f"point dimension {len(x)} != index dimension {self.dim}")
        if self._n == self._pts.shape[0]:
            grown = np.empty((2 * self._n, self.dim))
            grown[:self._n] = self._pts[:self._n]
            self._pts = grown
        self._pts[self._n] = x
        self._n += 1
        if self.accelerated and self._n >= _MIN_TREE:
            tail = self._n - self._n_tree
            if self._n >= 2 * self._n_tree or tail > self.tail_cap:
                self._tree = cKDTree(self._pts[:self._n].copy())
                self._n_tree = self._n
        return self._n - 1

    def _sqdist(self, rows: np.ndarray, q) -> np.ndarray:
        # fixed coordinate order; shared by both query paths
        s = (rows[:, 0] - q[0]) ** 2
        for j in range(1, self.dim):
            s += (rows[:, j] - q[j]) ** 2
        return s

    def _check_query(self, q):
        if self._n == 0:
            raise UsageError("nearest neighbor of an empty set")
        if len(q) != self.dim:
            raise UsageError(f"query dimension {len(q)} != index dimension {self.dim}")

    def nearest_linear(self, q) -> int:
        """Exhaustive scan; the reference for :meth:`nearest`."""
        self._check_query(q)
        q = [float(c) for c in q]
        return int(np.argmin(self._sqdist(self._pts[:self._n], q)))

    def nearest(self, q) -> int:
        self._check_query(q)
        if self._tree is None:
            return self.nearest_linear(q)
        q = np.array(q, dtype=np.float64)
        if self._n_tree >= 2:
            dists, idx = self._tree.query(q, k=2)
            if dists[1] > dists[0] * (1.0 + _REL_SLACK):
                cand = [int(idx[0])]
            else:
                cand = self._tree.query_ball_point(q, dists[0] * (1.0 + _REL_SLACK) + 1e-300)
                cand.sort()
        else:
            cand = [0]
        if self._n > self._n_tree:
            ids = np.concatenate([np.array(cand, dtype=np.intp), np.arange(self._n_tree, self._n)])
        else:
            ids = np.array(cand, dtype=np.intp)
        d2 = self._sqdist(self._pts[ids], q)
        return int(ids[np.argmin(d2)])
