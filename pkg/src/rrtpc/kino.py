"""Kinodynamic RRT by random forward propagation (no steering function).

Per iteration the stream supplies, in this order: ``d`` uniforms for
``x_rand``, one for the duration, then ``D`` for the control. The duration
is ``T_prop * (1 - r)``, uniform on (0, T_prop].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rrtpc.dynamics import SystemModel, euler_states, propagate, sample_control
from rrtpc.environment import Scene, is_trajectory_free, segments_free
from rrtpc.errors import UsageError
from rrtpc.rng import UniformStream
from rrtpc.tree import PlanResult, Tree


@dataclass(frozen=True)
class KinoConfig:
    k: int
    T_prop: float
    seed: int = 0
    h_max: float = 1e-3
    collision_resolution: float = 1e-3
    exact_collision: bool = True
    stop_on_goal: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise UsageError(f"k must be a positive integer, got {self.k}")
        if not self.T_prop > 0:
            raise UsageError(f"T_prop must be positive, got {self.T_prop}")
        if not self.h_max > 0 or not self.collision_resolution > 0:
            raise UsageError("h_max and collision_resolution must be positive")


def sample_duration(stream: UniformStream, T_prop: float) -> float:
    return T_prop * (1.0 - stream.uniform())


def kino_rrt(scene: Scene, sys: SystemModel, cfg: KinoConfig, accelerated: bool = True) -> PlanResult:
    if scene.dim != sys.state_dim:
        raise UsageError(f"scene dimension {scene.dim} != system state dimension {sys.state_dim}")
    d = scene.dim
    stream = UniformStream(cfg.seed)
    tree = Tree(scene.x_init, accelerated=accelerated)
    pts = tree.index
    U = sys.control_space
    gc = tuple(scene.goal.center.tolist())
    gr2 = scene.goal.radius ** 2
    obstacles = scene.obstacles

    def in_goal(x):
        return sum((a - b) ** 2 for a, b in zip(x, gc)) < gr2

    def free(states):
        for x in states:
            for c in x:
                if c < 0.0 or c > 1.0:
                    return False
        if not obstacles:
            return True
        S = np.array(states)
        if cfg.exact_collision:
            return bool(np.all(segments_free(scene, S[:-1], S[1:])))
        return is_trajectory_free(scene, S, cfg.collision_resolution, exact=False)

    first, goal_vertex = None, None
    if in_goal(scene.x_init.tolist()):
        first, goal_vertex = 0, 0
        if cfg.stop_on_goal:
            return PlanResult(tree, True, 0, 0, 0, cfg.seed)
    executed = 0
    for it in range(1, cfg.k + 1):
        executed = it
        x_rand = stream.take(d)
        near = pts.nearest(x_rand)
        t = sample_duration(stream, cfg.T_prop)
        u = sample_control(stream, U)
        states, _ = euler_states(sys, pts._pts[near].tolist(), u, t, cfg.h_max)
        if free(states):
            x_new = states[-1]
            vid = tree.add(x_new, near, (u, t))
            if first is None and in_goal(x_new):
                first, goal_vertex = it, vid
                if cfg.stop_on_goal:
                    break
    return PlanResult(tree, first is not None, first, goal_vertex, executed, cfg.seed,
                      {"system": sys.name, "h_max": cfg.h_max})


def replay_edge(sys: SystemModel, result: PlanResult, child: int, h_max: float):
    """Re-propagate the stored (control, duration) of the edge into ``child``."""
    parent = result.tree.parent[child]
    u, t = result.tree.edge_meta[child]
    return propagate(sys, result.tree.state(parent), u, t, h_max)


def write_edges_csv(result: PlanResult, control_dim: int, fh) -> None:
    """Tree edges as ``parent_id,child_id,t,u1..uD`` rows."""
    cols = ",".join(f"u{j + 1}" for j in range(control_dim))
    fh.write(f"# kino-rrt edges seed={result.seed}\nparent_id,child_id,t,{cols}\n")
    for parent, child in result.tree.edges():
        u, t = result.tree.edge_meta[child]
        fh.write(f"{parent},{child},{t!r}," + ",".join(repr(float(c)) for c in u) + "\n")
