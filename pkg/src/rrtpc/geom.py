"""GEOM-RRT: the plain geometric RRT with a steering step of length eta.

Per iteration the stream supplies exactly ``d`` uniforms, read in
coordinate order, for the sample ``x_rand`` in [0,1]^d. Samples that cannot
be connected still consume their iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rrtpc.environment import Scene, segment_free
from rrtpc.errors import UsageError
from rrtpc.rng import UniformStream
from rrtpc.tree import PlanResult, Tree


@dataclass(frozen=True)
class GeomConfig:
    k: int
    eta: float
    seed: int = 0
    stop_on_goal: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise UsageError(f"k must be a positive integer, got {self.k}")
        if not self.eta > 0:
            raise UsageError(f"eta must be positive, got {self.eta}")


def new_state(x_rand, x_near, eta: float) -> tuple:
    """Point at most ``eta`` from ``x_near`` toward ``x_rand``."""
    dist = math.sqrt(sum((r - n) ** 2 for r, n in zip(x_rand, x_near)))
    if dist <= eta:
        return tuple(float(c) for c in x_rand)
    s = eta / dist
    return tuple(n + s * (r - n) for r, n in zip(x_rand, x_near))


def extend(tree: Tree, obstacles, x_rand, eta: float):
    """One EXTEND step toward ``x_rand``: (near id, x_new, new vertex id or None)."""
    near = tree.index.nearest(x_rand)
    x_near = tuple(tree.index._pts[near].tolist())
    x_new = new_state(x_rand, x_near, eta)
    if x_new == x_near:
        return near, x_new, None  # zero-length edge
    if segment_free(obstacles, x_near, x_new):
        return near, x_new, tree.add(x_new, near)
    return near, x_new, None


def geom_rrt(scene: Scene, cfg: GeomConfig, accelerated: bool = True) -> PlanResult:
    d = scene.dim
    stream = UniformStream(cfg.seed)
    tree = Tree(scene.x_init, accelerated=accelerated)
    obstacles = scene.obstacles
    gc = tuple(scene.goal.center.tolist())
    gr2 = scene.goal.radius ** 2

    def in_goal(x):
        return sum((a - b) ** 2 for a, b in zip(x, gc)) < gr2

    first, goal_vertex = None, None
    if in_goal(scene.x_init.tolist()):
        first, goal_vertex = 0, 0
        if cfg.stop_on_goal:
            return PlanResult(tree, True, 0, 0, 0, cfg.seed)
    executed = 0
    for it in range(1, cfg.k + 1):
        executed = it
        x_rand = stream.take(d)
        _, x_new, vid = extend(tree, obstacles, x_rand, cfg.eta)
        if vid is not None and first is None and in_goal(x_new):
            first, goal_vertex = it, vid
            if cfg.stop_on_goal:
                break
    return PlanResult(tree, first is not None, first, goal_vertex, executed, cfg.seed)


def write_path_csv(path, seed: int, fh) -> None:
    """One waypoint per row under a ``# geom-rrt path`` header."""
    pts = np.atleast_2d(path.waypoints)
    fh.write(f"# geom-rrt path d={pts.shape[1]} seed={seed}\n")
    for row in pts:
        fh.write(",".join(repr(float(c)) for c in row) + "\n")


def read_path_csv(text: str):
    from rrtpc.space import PathPolyline
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(c) for c in line.split(",")])
    return PathPolyline(rows)
