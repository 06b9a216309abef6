from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rrtpc.errors import UsageError
from rrtpc.nn import PointIndex
from rrtpc.space import PathPolyline


class Tree:
    """RRT vertex set with parent links. Vertex 0 is the root.

    The tree owns the nearest-neighbor index, so vertex ids and index ids
    coincide.
    """

    def __init__(self, root, accelerated: bool = True):
        root = [float(c) for c in root]
        self.index = PointIndex(len(root), accelerated=accelerated)
        self.parent: list[int | None] = [None]
        self.edge_meta: list = [None]
        self.index.insert(root)

    def __len__(self):
        return len(self.index)

    @property
    def dim(self) -> int:
        return self.index.dim

    @property
    def states(self) -> np.ndarray:
        return self.index.points

    def state(self, i: int) -> np.ndarray:
        return self.index.points[i]

    def add(self, x, parent: int, meta=None) -> int:
        if not 0 <= parent < len(self):
            raise UsageError(f"unknown parent vertex {parent}")
        vid = self.index.insert(x)
        self.parent.append(parent)
        self.edge_meta.append(meta)
        return vid

    def nearest(self, q) -> int:
        return self.index.nearest(q)

    def lineage(self, v: int) -> list[int]:
        """Vertex ids from the root to ``v``."""
        out = []
        while v is not None:
            out.append(v)
            v = self.parent[v]
        return out[::-1]

    def edges(self):
        for child in range(1, len(self)):
            yield self.parent[child], child


@dataclass
class PlanResult:
    tree: Tree
    success: bool
    first_success_iteration: int | None
    goal_vertex: int | None
    iterations_executed: int
    seed: int = 0
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SinglePointPath:
    """Degenerate solution: the start already lies in the goal region."""

    waypoints: np.ndarray

    @property
    def length(self) -> float:
        return 0.0


def extract_path(result: PlanResult) -> PathPolyline | SinglePointPath:
    """Root-first waypoints from the start to the goal vertex."""
    if not result.success:
        raise UsageError("no path: the planner did not reach the goal")
    ids = result.tree.lineage(result.goal_vertex)
    pts = result.tree.states[ids]
    if len(ids) == 1:
        return SinglePointPath(pts.copy())
    return PathPolyline(pts)


def extract_controls(result: PlanResult) -> list:
    """(control, duration) pairs along the solution, root first."""
    if not result.success:
        raise UsageError("no path: the planner did not reach the goal")
    ids = result.tree.lineage(result.goal_vertex)
    return [result.tree.edge_meta[i] for i in ids[1:]]
