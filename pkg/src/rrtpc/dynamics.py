"""Lipschitz control systems, piecewise-constant controls, Euler propagation.

Vector fields are written over *coordinate sequences*: ``f(x, u)`` indexes
``x[i]`` and ``u[j]`` and returns a tuple of derivative coordinates. Passing
float tuples gives the single-state path used by the planner; passing lists
of numpy columns evaluates a whole batch at once. Both paths run the same
arithmetic.

Every shipped system lives in normalized coordinates so that its planning
states fill [0,1]^d. ``to_physical`` / ``from_physical`` give the affine map
to the physical units used when the system is described.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from rrtpc.errors import IntegrationError, UsageError
from rrtpc.rng import UniformStream


@dataclass(frozen=True)
class ControlSpace:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise UsageError("control bounds must be non-empty and equal length")
        if not all(a < b for a, b in zip(lo, hi)):
            raise UsageError("control space needs lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lower, self.upper))

    def contains(self, u) -> bool:
        return len(u) == self.dim and all(a <= c <= b for c, a, b in zip(u, self.lower, self.upper))


def _identity(x):
    return np.asarray(x, dtype=np.float64).copy()


@dataclass(frozen=True)
class SystemModel:
    name: str
    state_dim: int
    control_dim: int
    vector_field: Callable
    K_x: float
    K_u: float
    control_space: ControlSpace
    params: dict = field(default_factory=dict)
    to_physical: Callable = _identity
    from_physical: Callable = _identity
    description: str = ""

    def f(self, x, u) -> np.ndarray:
        return np.array(self.vector_field(x, u), dtype=np.float64)


@dataclass
class Trajectory:
    """Sampled trajectory. ``controls[i]`` is the control active after ``times[i]``
    (the last row repeats the final piece)."""

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    pieces: list = field(default_factory=list)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: float) -> np.ndarray:
        """Linear interpolation between stored samples."""
        if not (0.0 <= t <= self.times[-1] + 1e-12):
            raise UsageError(f"time {t} outside trajectory [0, {self.times[-1]}]")
        return np.array([np.interp(t, self.times, self.states[:, j])
                         for j in range(self.states.shape[1])])


@dataclass(frozen=True)
class PiecewiseConstantControl:
    pieces: tuple
    resolution: float

    def __post_init__(self):
        if not self.pieces:
            raise UsageError("a piecewise constant control needs at least one piece")
        if not self.resolution > 0:
            raise UsageError("resolution must be positive")
        pieces = tuple((tuple(float(c) for c in u), float(dt)) for u, dt in self.pieces)
        for _, dt in pieces:
            if abs(dt - self.resolution) > 1e-12 * max(1.0, self.resolution):
                raise UsageError("every piece must last exactly one resolution step")
        object.__setattr__(self, "pieces", pieces)

    @property
    def duration(self) -> float:
        return self.resolution * len(self.pieces)


def euler_states(sys: SystemModel, x0, u, t: float, h_max: float) -> tuple[list, float]:
    """Euler iterates x_i = x_{i-1} + h f(x_{i-1}, u) with h = t / ceil(t / h_max)."""
    if not t > 0:
        raise UsageError(f"propagation duration must be positive, got {t}")
    if not h_max > 0:
        raise UsageError(f"h_max must be positive, got {h_max}")
    steps = math.ceil(t / h_max)
    h = t / steps
    f = sys.vector_field
    x = tuple(float(c) for c in x0)
    u = tuple(float(c) for c in u)
    out = [x]
    for _ in range(steps):
        dx = f(x, u)
        x = tuple(xi + h * di for xi, di in zip(x, dx))
        out.append(x)
    if not all(math.isfinite(c) for c in x):
        raise IntegrationError(f"non-finite state after propagating {sys.name} for t={t}")
    return out, h


def propagate(sys: SystemModel, x0, u, t: float, h_max: float = 1e-3) -> Trajectory:
    """Apply constant control ``u`` from ``x0`` for duration ``t`` (explicit Euler)."""
    if len(x0) != sys.state_dim or len(u) != sys.control_dim:
        raise UsageError("state or control dimension does not match the system")
    states, h = euler_states(sys, x0, u, t, h_max)
    n = len(states)
    times = np.arange(n) * h
    times[-1] = t
    controls = np.tile(np.asarray(u, dtype=np.float64), (n, 1))
    return Trajectory(times, np.array(states), controls, [(tuple(float(c) for c in u), float(t))])


def rollout(sys: SystemModel, x0, control: PiecewiseConstantControl, h_max: float = 1e-3) -> Trajectory:
    """Forward-integrate a piecewise-constant control, piece after piece."""
    times, states, controls = [np.zeros(1)], [np.asarray([x0], dtype=np.float64)], []
    x, t0 = x0, 0.0
    for u, dt in control.pieces:
        seg = propagate(sys, x, u, dt, h_max)
        times.append(t0 + seg.times[1:])
        states.append(seg.states[1:])
        controls.append(seg.controls[:-1])
        x, t0 = seg.end, t0 + dt
    controls.append(controls[-1][-1:])
    return Trajectory(np.concatenate(times), np.concatenate(states),
                      np.concatenate(controls), list(control.pieces))


def euler_endpoints(sys: SystemModel, X0, U, T, steps: int) -> np.ndarray:
    """Batch Euler: row i integrates X0[i] under U[i] for T[i] in ``steps`` steps."""
    X0 = np.asarray(X0, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    h = np.broadcast_to(np.asarray(T, dtype=np.float64), (X0.shape[0],)) / steps
    x = [X0[:, j].copy() for j in range(X0.shape[1])]
    u = [U[:, j] for j in range(U.shape[1])]
    f = sys.vector_field
    for _ in range(steps):
        dx = f(x, u)
        x = [xi + h * di for xi, di in zip(x, dx)]
    return np.stack(x, axis=1)


@dataclass
class LipschitzReport:
    system: str
    samples: int
    max_ratio_x: float
    max_ratio_u: float
    declared_K_x: float
    declared_K_u: float

    @property
    def exceeds_x(self) -> bool:
        return self.max_ratio_x > self.declared_K_x * (1 + 1e-9)

    @property
    def exceeds_u(self) -> bool:
        return self.max_ratio_u > self.declared_K_u * (1 + 1e-9)

    @property
    def ok(self) -> bool:
        return not (self.exceeds_x or self.exceeds_u)


def lipschitz_probe(sys: SystemModel, samples: int, seed: int) -> LipschitzReport:
    """Empirical Lipschitz ratios of the vector field over [0,1]^d x U."""
    rng = np.random.Generator(np.random.Philox(seed))
    d, D = sys.state_dim, sys.control_dim
    lo = np.asarray(sys.control_space.lower)
    hi = np.asarray(sys.control_space.upper)
    X0, X1 = rng.random((samples, d)), rng.random((samples, d))
    U0 = lo + (hi - lo) * rng.random((samples, D))
    U1 = lo + (hi - lo) * rng.random((samples, D))

    def field(X, U):
        return np.stack([np.broadcast_to(c, (samples,)) for c in
                         sys.vector_field([X[:, j] for j in range(d)], [U[:, j] for j in range(D)])], axis=1)

    fx = np.linalg.norm(field(X0, U0) - field(X1, U0), axis=1) / np.linalg.norm(X0 - X1, axis=1)
    fu = np.linalg.norm(field(X0, U0) - field(X0, U1), axis=1) / np.linalg.norm(U0 - U1, axis=1)
    return LipschitzReport(sys.name, samples, float(np.max(fx)), float(np.max(fu)), sys.K_x, sys.K_u)


def sample_control(stream: UniformStream, space: ControlSpace) -> tuple:
    """Uniform control from the box, one draw per coordinate in order."""
    r = stream.take(space.dim)
    return tuple(a + (b - a) * ri for ri, a, b in zip(r, space.lower, space.upper))


# --- system catalog ---------------------------------------------------------

def single_integrator(dim: int = 2, umax: float = 1.0) -> SystemModel:
    """x' = u with u in [-umax, umax]^dim. K_x = 0, K_u = 1."""
    def f(x, u):
        return tuple(u[i] for i in range(dim))
    return SystemModel("single_integrator", dim, dim, f, 0.0, 1.0,
                       ControlSpace([-umax] * dim, [umax] * dim),
                       {"dim": dim, "umax": umax}, description="x' = u")


def scalar_linear(a: float = 1.0, umax: float = 1.0) -> SystemModel:
    """x' = a x + u in one dimension. K_x = |a|, K_u = 1."""
    def f(x, u):
        return (a * x[0] + u[0],)
    return SystemModel("scalar_linear", 1, 1, f, abs(a), 1.0,
                       ControlSpace([-umax], [umax]), {"a": a, "umax": umax},
                       description="x' = a x + u")


def double_integrator(vmax: float = 1.0, umax: float = 1.0) -> SystemModel:
    """Planar point mass p'' = u with |v_i| <= vmax mapped into [0,1].

    Normalized state z = (px, py, sx, sy) with v = vmax (2 s - 1), so
    p' = vmax (2 s - 1) and s' = u / (2 vmax). Hence K_x = 2 vmax and
    K_u = 1 / (2 vmax).
    """
    c = 2.0 * vmax
    inv = 1.0 / c

    def f(x, u):
        return (vmax * (2.0 * x[2] - 1.0), vmax * (2.0 * x[3] - 1.0), u[0] * inv, u[1] * inv)

    def to_physical(z):
        z = np.asarray(z, dtype=np.float64)
        return np.concatenate([z[..., :2], vmax * (2.0 * z[..., 2:] - 1.0)], axis=-1)

    def from_physical(x):
        x = np.asarray(x, dtype=np.float64)
        return np.concatenate([x[..., :2], (x[..., 2:] + vmax) / c], axis=-1)

    return SystemModel("double_integrator", 4, 2, f, c, inv,
                       ControlSpace([-umax, -umax], [umax, umax]),
                       {"vmax": vmax, "umax": umax}, to_physical, from_physical,
                       "p'' = u, velocities normalized into [0,1]")


def kinematic_car(smax: float = 1.0, wmax: float = 1.0) -> SystemModel:
    """x' = s cos(th), y' = s sin(th), th' = w with th = 2 pi (q - 1/2).

    The Jacobian in (x, y) vanishes and |d f / d q| = 2 pi |s|, so
    K_x = 2 pi smax. The control Jacobian has orthonormal-or-smaller columns
    ((cos, sin, 0) and (0, 0, 1 / 2 pi)), so K_u = 1.
    """
    two_pi = 2.0 * math.pi

    def f(x, u):
        th = two_pi * (x[2] - 0.5)
        return (u[0] * np.cos(th), u[0] * np.sin(th), u[1] / two_pi)

    def to_physical(z):
        z = np.asarray(z, dtype=np.float64)
        return np.concatenate([z[..., :2], two_pi * (z[..., 2:] - 0.5)], axis=-1)

    def from_physical(x):
        x = np.asarray(x, dtype=np.float64)
        return np.concatenate([x[..., :2], x[..., 2:] / two_pi + 0.5], axis=-1)

    return SystemModel("kinematic_car", 3, 2, f, two_pi * smax, 1.0,
                       ControlSpace([-smax, -wmax], [smax, wmax]),
                       {"smax": smax, "wmax": wmax}, to_physical, from_physical,
                       "unicycle, heading normalized into [0,1]")


CATALOG = {
    "single_integrator": single_integrator,
    "scalar_linear": scalar_linear,
    "double_integrator": double_integrator,
    "kinematic_car": kinematic_car,
}


def make_system(spec: str) -> SystemModel:
    """Build a catalog system from ``name`` or ``name:key=val,key=val``."""
    name, _, rest = spec.partition(":")
    if name not in CATALOG:
        raise UsageError(f"unknown system '{name}' (known: {', '.join(CATALOG)})")
    kwargs = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"bad system parameter '{item}'")
        kwargs[key.strip()] = int(val) if key.strip() == "dim" else float(val)
    try:
        return CATALOG[name](**kwargs)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name}: {exc}") from None
