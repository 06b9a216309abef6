"""Scenes, exact collision queries, clearance, and the scene file format.

Obstacles are closed sets, so touching one counts as a collision. The cube
[0,1]^d bounds the state space: points outside it are not free, and the
distance to its faces enters the clearance of interior points.

Scene document (UTF-8, ``#`` starts a comment)::

    dim = 2
    init = 0.1 0.5
    goal = 0.9 0.5 ; 0.1
    obstacle box = 0.3 0.0 ; 0.4 0.4
    obstacle ball = 0.6 0.6 ; 0.05
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from rrtpc.errors import ParseError, UsageError
from rrtpc.space import Ball, PathPolyline, as_state


@dataclass(frozen=True)
class BoxObstacle:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = as_state(self.lo), as_state(self.hi)
        if lo.shape != hi.shape:
            raise UsageError("box corners differ in dimension")
        if not np.all(lo < hi):
            raise UsageError(f"box needs min < max componentwise, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "_lo", tuple(lo.tolist()))
        object.__setattr__(self, "_hi", tuple(hi.tolist()))

    @property
    def dim(self):
        return self.lo.shape[0]

    def contains(self, x) -> bool:
        return all(l <= c <= h for c, l, h in zip(x, self._lo, self._hi))

    def hits_segment(self, a, b) -> bool:
        # slab clipping against the closed box
        t0, t1 = 0.0, 1.0
        for ai, bi, lo, hi in zip(a, b, self._lo, self._hi):
            di = bi - ai
            if di == 0.0:
                if ai < lo or ai > hi:
                    return False
                continue
            ta = (lo - ai) / di
            tb = (hi - ai) / di
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
            if t0 > t1:
                return False
        return True

    def distance(self, x) -> float:
        """Euclidean distance from ``x`` to the box (0 inside)."""
        s = 0.0
        for c, lo, hi in zip(x, self._lo, self._hi):
            if c < lo:
                s += (lo - c) ** 2
            elif c > hi:
                s += (c - hi) ** 2
        return math.sqrt(s)

    def hits_segments(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`hits_segment` over rows of ``A`` and ``B``."""
        D = B - A
        n = A.shape[0]
        t0 = np.zeros(n)
        t1 = np.ones(n)
        hit = np.ones(n, dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            for j in range(A.shape[1]):
                a, d = A[:, j], D[:, j]
                lo, hi = self._lo[j], self._hi[j]
                flat = d == 0.0
                hit &= ~(flat & ((a < lo) | (a > hi)))
                ta = (lo - a) / d
                tb = (hi - a) / d
                tmin = np.where(flat, -np.inf, np.minimum(ta, tb))
                tmax = np.where(flat, np.inf, np.maximum(ta, tb))
                t0 = np.maximum(t0, tmin)
                t1 = np.minimum(t1, tmax)
        return hit & (t0 <= t1)


@dataclass(frozen=True)
class BallObstacle:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_state(self.center))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise UsageError(f"obstacle radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "_c", tuple(self.center.tolist()))
        object.__setattr__(self, "_r2", self.radius * self.radius)

    @property
    def dim(self):
        return self.center.shape[0]

    def contains(self, x) -> bool:
        return sum((xi - ci) ** 2 for xi, ci in zip(x, self._c)) <= self._r2

    def hits_segment(self, a, b) -> bool:
        # closest point of the segment to the center; equivalent to the
        # discriminant test restricted to t in [0, 1]
        dd = 0.0
        proj = 0.0
        for ai, bi, ci in zip(a, b, self._c):
            di = bi - ai
            dd += di * di
            proj += (ci - ai) * di
        t = 0.0 if dd == 0.0 else min(1.0, max(0.0, proj / dd))
        s = 0.0
        for ai, bi, ci in zip(a, b, self._c):
            s += (ai + t * (bi - ai) - ci) ** 2
        return s <= self._r2

    def distance(self, x) -> float:
        dist = math.sqrt(sum((xi - ci) ** 2 for xi, ci in zip(x, self._c)))
        return max(0.0, dist - self.radius)

    def hits_segments(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        D = B - A
        C = np.asarray(self._c)
        dd = np.einsum("ij,ij->i", D, D)
        proj = np.einsum("ij,ij->i", C - A, D)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dd == 0.0, 0.0, np.clip(proj / dd, 0.0, 1.0))
        P = A + t[:, None] * D - C
        return np.einsum("ij,ij->i", P, P) <= self._r2


Obstacle = BoxObstacle | BallObstacle


def _in_cube(x) -> bool:
    return all(0.0 <= c <= 1.0 for c in x)


@dataclass(frozen=True)
class Scene:
    dim: int
    obstacles: tuple = ()
    x_init: np.ndarray = None
    goal: Ball = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "x_init", as_state(self.x_init, self.dim))
        for ob in self.obstacles:
            if ob.dim != self.dim:
                raise UsageError(f"obstacle dimension {ob.dim} != scene dimension {self.dim}")
        if self.goal.dim != self.dim:
            raise UsageError("goal dimension does not match scene")
        if not is_state_free(self, self.x_init):
            raise UsageError("x_init is not in free space")
        if not is_state_free(self, self.goal.center):
            raise UsageError("goal center is not in free space")


def _check_dim(scene: Scene, x):
    if len(x) != scene.dim:
        raise UsageError(f"state dimension {len(x)} != scene dimension {scene.dim}")


def is_state_free(scene: Scene, x) -> bool:
    x = tuple(float(c) for c in x)
    _check_dim(scene, x)
    if not _in_cube(x):
        return False
    return not any(ob.contains(x) for ob in scene.obstacles)


def segment_free(obstacles, a: tuple, b: tuple) -> bool:
    """Fast path for :func:`is_segment_free` on float tuples, no validation."""
    if not (_in_cube(a) and _in_cube(b)):
        return False
    for ob in obstacles:
        if ob.hits_segment(a, b):
            return False
    return True


def is_segment_free(scene: Scene, a, b) -> bool:
    """True iff the closed segment ab lies in free space (exact test)."""
    a = tuple(float(c) for c in a)
    b = tuple(float(c) for c in b)
    _check_dim(scene, a)
    _check_dim(scene, b)
    return segment_free(scene.obstacles, a, b)


def segments_free(scene: Scene, A, B) -> np.ndarray:
    """Vectorized exact segment test; row i checks segment A[i]-B[i]."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    ok = np.all((A >= 0.0) & (A <= 1.0), axis=1) & np.all((B >= 0.0) & (B <= 1.0), axis=1)
    for ob in scene.obstacles:
        ok &= ~ob.hits_segments(A, B)
    return ok


def is_trajectory_free(scene: Scene, traj, resolution: float = 1e-3, exact: bool = True) -> bool:
    """Collision check for a propagated trajectory.

    The stored states are joined by straight chords. With ``exact=True``
    each chord gets the exact segment test; otherwise chords are subdivided
    so that checked points are at most ``resolution`` apart.
    """
    states = np.asarray(getattr(traj, "states", traj), dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != scene.dim:
        raise UsageError("trajectory states do not match the scene dimension")
    if not resolution > 0:
        raise UsageError("resolution must be positive")
    if states.shape[0] == 1:
        return is_state_free(scene, states[0])
    A, B = states[:-1], states[1:]
    if exact:
        return bool(np.all(segments_free(scene, A, B)))
    lengths = np.sqrt(np.sum((B - A) ** 2, axis=1))
    for a, b, length in zip(A, B, lengths):
        n = max(1, math.ceil(length / resolution))
        for t in np.linspace(0.0, 1.0, n + 1):
            if not is_state_free(scene, a + t * (b - a)):
                return False
    return True


def clearance(scene: Scene, x) -> float:
    """Distance from ``x`` to the nearest obstacle or cube face; 0 if not free."""
    x = tuple(float(c) for c in x)
    _check_dim(scene, x)
    if not is_state_free(scene, x):
        return 0.0
    best = min(min(c, 1.0 - c) for c in x)
    for ob in scene.obstacles:
        best = min(best, ob.distance(x))
    return best


def path_clearance(scene: Scene, path: PathPolyline, step: float) -> float:
    """Minimum clearance over points sampled along ``path``.

    Points are taken at arc-length spacing at most ``step`` (waypoints
    included). This is a sampled estimate: the true minimum between two
    samples can be lower by up to ``step / 2``.
    """
    if not step > 0:
        raise UsageError("step must be positive")
    best = math.inf
    cum = path.cumulative
    for i in range(len(path) - 1):
        a, b = path.waypoints[i], path.waypoints[i + 1]
        n = max(1, math.ceil((cum[i + 1] - cum[i]) / step))
        for t in np.linspace(0.0, 1.0, n + 1):
            c = clearance(scene, a + t * (b - a))
            if c == 0.0:
                return 0.0
            best = min(best, c)
    return best


# --- scene documents -------------------------------------------------------

def _numbers(text: str, lineno: int, key: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise ParseError(f"bad number ({exc})", lineno, key) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("numbers must be finite", lineno, key)
    return vals


def _two_parts(text: str, lineno: int, key: str) -> tuple[list[float], list[float]]:
    parts = text.split(";")
    if len(parts) != 2:
        raise ParseError("expected '<values> ; <values>'", lineno, key)
    return _numbers(parts[0], lineno, key), _numbers(parts[1], lineno, key)


def parse_scene(text, name: str = "") -> Scene:
    """Parse a scene document (bytes or str) and validate it."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc}") from None
    scalars: dict[str, tuple[int, object]] = {}
    obstacles: list[tuple[int, str, list[float], list[float]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = " ".join(key.split())
        if key in ("obstacle box", "obstacle ball"):
            first, second = _two_parts(value, lineno, key)
            obstacles.append((lineno, key.split()[1], first, second))
            continue
        if key not in ("dim", "init", "goal"):
            raise ParseError(f"unknown key '{key}'", lineno, key)
        if key in scalars:
            raise ParseError(f"duplicate key '{key}'", lineno, key)
        if key == "dim":
            try:
                scalars[key] = (lineno, int(value))
            except ValueError:
                raise ParseError(f"dim must be an integer, got '{value}'", lineno, key) from None
        elif key == "init":
            scalars[key] = (lineno, _numbers(value, lineno, key))
        else:
            scalars[key] = (lineno, _two_parts(value, lineno, key))
    for key in ("dim", "init", "goal"):
        if key not in scalars:
            raise ParseError(f"missing key '{key}'", field=key)
    dim_line, dim = scalars["dim"]
    if dim < 1:
        raise ParseError("dim must be positive", dim_line, "dim")

    def want(vals, lineno, key, n):
        if len(vals) != n:
            raise ParseError(f"expected {n} coordinates, got {len(vals)}", lineno, key)

    init_line, init = scalars["init"]
    want(init, init_line, "init", dim)
    goal_line, (gc, gr) = scalars["goal"]
    want(gc, goal_line, "goal", dim)
    if len(gr) != 1 or not gr[0] > 0:
        raise ParseError("goal radius must be a single positive number", goal_line, "goal")
    obs = []
    for lineno, kind, first, second in obstacles:
        key = f"obstacle {kind}"
        want(first, lineno, key, dim)
        try:
            if kind == "box":
                want(second, lineno, key, dim)
                obs.append(BoxObstacle(first, second))
            else:
                if len(second) != 1:
                    raise ParseError("ball radius must be a single number", lineno, key)
                obs.append(BallObstacle(first, second[0]))
        except UsageError as exc:
            raise ParseError(str(exc), lineno, key) from None
    try:
        return Scene(dim=dim, obstacles=tuple(obs), x_init=init, goal=Ball(gc, gr[0]), name=name)
    except UsageError as exc:
        msg = str(exc)
        if "x_init" in msg:
            raise ParseError(msg, init_line, "init") from None
        raise ParseError(msg, goal_line, "goal") from None


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def serialize_scene(scene: Scene) -> str:
    lines = [f"dim = {scene.dim}", f"init = {_fmt(scene.x_init)}",
             f"goal = {_fmt(scene.goal.center)} ; {scene.goal.radius!r}"]
    for ob in scene.obstacles:
        if isinstance(ob, BoxObstacle):
            lines.append(f"obstacle box = {_fmt(ob.lo)} ; {_fmt(ob.hi)}")
        else:
            lines.append(f"obstacle ball = {_fmt(ob.center)} ; {ob.radius!r}")
    return "\n".join(lines) + "\n"


def builtin_scenes() -> list[str]:
    root = resources.files("rrtpc") / "scenes"
    return sorted(p.name[:-len(".scene")] for p in root.iterdir() if p.name.endswith(".scene"))


def load_scene(ref: str | Path) -> Scene:
    """Load a scene from a file path, or by name from the shipped fixtures."""
    path = Path(ref)
    if path.is_file():
        return parse_scene(path.read_bytes(), name=path.stem)
    name = str(ref)
    if name.endswith(".scene"):
        name = name[:-len(".scene")]
    res = resources.files("rrtpc") / "scenes" / f"{name}.scene"
    if not res.is_file():
        raise UsageError(f"no scene file or built-in fixture named '{ref}'")
    return parse_scene(res.read_bytes(), name=name)
