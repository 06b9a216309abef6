"""Closed-form quantities from the completeness arguments.

Geometric case: a witness path is covered by balls of radius nu/5 spaced at
most nu/5 apart; each RRT iteration advances one ball with probability at
least p = |B_{nu/5}|, so failure after k iterations is bounded by the
binomial lower tail Pr[Bin(k, p) < m].

Kinodynamic case: the witness trajectory is sampled every tau time units,
a propagation step from near one center lands near the next with
probability at least rho, and the same binomial tail applies with
p = |B_{delta/5}| * rho.

All probabilities are computed in log space.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from rrtpc.dynamics import ControlSpace, Trajectory
from rrtpc.errors import UsageError
from rrtpc.space import PathPolyline, ball_volume

log = logging.getLogger(__name__)

_ONE_MINUS = math.nextafter(1.0, 0.0)


def _ceil_count(x: float) -> int:
    # guards ceil(20.000000000000004) -> 21 when the ratio is integral up to rounding
    return max(1, math.ceil(x - 1e-9 * max(1.0, abs(x))))


# --- geometric cover ---------------------------------------------------------

@dataclass(frozen=True)
class GeomCover:
    delta: float
    nu: float
    spacing: float
    m: int
    centers: np.ndarray
    p: float
    p_clamped: bool = False


def cover_geometric(path: PathPolyline, delta_clear: float, delta_goal: float,
                    eta: float, d: int) -> GeomCover:
    """Ball cover of a witness path and the per-iteration advance probability."""
    if not (delta_clear > 0 and delta_goal > 0 and eta > 0):
        raise UsageError("delta_clear, delta_goal and eta must be positive")
    L = path.length
    if not L > 0:
        raise UsageError("path length must be positive")
    delta = min(delta_clear, delta_goal)
    nu = min(delta, eta)
    spacing = nu / 5.0
    m = _ceil_count(L / spacing)
    centers = np.array([path.point_at(min(L, i * L / m)) for i in range(m + 1)])
    centers[-1] = path.waypoints[-1]
    p = ball_volume(d, spacing)
    clamped = False
    if p >= 1.0:
        warnings.warn(f"ball volume {p} >= 1; clamping p below 1", RuntimeWarning, stacklevel=2)
        p, clamped = _ONE_MINUS, True
    return GeomCover(delta, nu, spacing, m, centers, p, clamped)


# --- binomial tail and its relaxation ----------------------------------------

def log_failure_prob_exact(p: float, m: int, k: int) -> float:
    """ln Pr[X_k < m] for X_k ~ Binomial(k, p).

    Terms come from the ratio recurrence t_{i+1}/t_i = (k-i)/(i+1) * p/(1-p)
    anchored at ln t_0 = k ln(1-p); this avoids the cancellation between
    large lgamma values when k is big.
    """
    if not 0.0 < p < 1.0:
        raise UsageError(f"p must lie in (0, 1), got {p}")
    if m < 1 or k < 1:
        raise UsageError("m and k must be positive integers")
    if m > k:
        return 0.0
    i = np.arange(m - 1, dtype=np.float64)
    steps = np.log((k - i) / (i + 1)) + (math.log(p) - math.log1p(-p))
    terms = k * math.log1p(-p) + np.concatenate([[0.0], np.cumsum(steps)])
    top = terms.max()
    return min(0.0, float(top + math.log(np.exp(terms - top).sum())))


def failure_prob_exact(p: float, m: int, k: int) -> float:
    return math.exp(log_failure_prob_exact(p, m, k))


@dataclass(frozen=True)
class RelaxedBound:
    """m/(m-1)! * k^m * e^{-pk}, with a flag when its derivation does not apply."""

    log_value: float
    valid: bool
    reason: str = ""

    @property
    def value(self) -> float:
        if self.log_value > 709.0:
            return math.inf
        return math.exp(self.log_value)


def failure_prob_relaxed(p: float, m: int, k: int) -> RelaxedBound:
    if not p > 0 or m < 1 or k < 1:
        raise UsageError("need p > 0 and positive integers m, k")
    log_value = math.log(m) - math.lgamma(m) + m * math.log(k) - p * k
    problems = []
    if not k > m:
        problems.append("k <= m")
    if not p < 0.5:
        problems.append("p >= 1/2")
    return RelaxedBound(log_value, not problems, "; ".join(problems))


@dataclass(frozen=True)
class BoundReport:
    p: float
    m: int
    k: int
    log_exact_tail: float
    relaxed: RelaxedBound

    @property
    def exact_tail(self) -> float:
        return math.exp(self.log_exact_tail)

    @property
    def relaxed_bound(self) -> float | None:
        return self.relaxed.value if self.relaxed.valid else None

    def lines(self) -> list[str]:
        out = [f"p={self.p!r}", f"m={self.m}", f"k={self.k}",
               f"exact_tail={self.exact_tail!r}", f"log_exact_tail={self.log_exact_tail!r}"]
        if self.relaxed.valid:
            out += [f"relaxed_bound={self.relaxed.value!r}", f"log_relaxed_bound={self.relaxed.log_value!r}"]
        else:
            out += ["relaxed_bound=NA", f"relaxed_invalid={self.relaxed.reason}"]
        return out


def bound_report(p: float, m: int, k: int) -> BoundReport:
    return BoundReport(p, m, k, log_failure_prob_exact(p, m, k), failure_prob_relaxed(p, m, k))


def iterations_for_confidence(p: float, m: int, target_failure: float) -> int:
    """Smallest k with Pr[Bin(k, p) < m] <= target_failure."""
    if not 0.0 < target_failure < 1.0:
        raise UsageError("target_failure must lie in (0, 1)")
    log_target = math.log(target_failure)
    hi = max(1, m)
    while log_failure_prob_exact(p, m, hi) > log_target:
        hi *= 2
    lo = 0  # invariant: tail(lo) > target (k = 0 never succeeds)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log_failure_prob_exact(p, m, mid) <= log_target:
            hi = mid
        else:
            lo = mid
    return hi


# --- kinodynamic machinery -------------------------------------------------------

def divergence_bound(K_x: float, K_u: float, delta0: float, delta_u: float, T: float) -> float:
    """Endpoint separation bound for two constant-control trajectories."""
    if min(K_x, K_u, delta0, delta_u) < 0 or not T > 0:
        raise UsageError("inputs must be nonnegative and T positive")
    grow = math.exp(K_x * T)
    return grow * delta0 + K_u * T * grow * delta_u


@dataclass(frozen=True)
class PropagationParams:
    kappa: float
    delta: float
    epsilon: float
    delta_start: float
    K_x: float
    K_u: float
    T: float

    def delta_u_max(self) -> float:
        return control_delta_max(self.kappa, self.delta, self.epsilon, self.delta_start,
                                 self.K_x, self.K_u, self.T)


def control_delta_max(kappa: float, delta: float, epsilon: float, delta_start: float,
                      K_x: float, K_u: float, T: float) -> float:
    """Largest control deviation that still lands within kappa*delta - epsilon.

    Returns 0 when no deviation qualifies.
    """
    if not 0 < kappa <= 1:
        raise UsageError("kappa must lie in (0, 1]")
    if not 0 < epsilon < kappa * delta:
        raise UsageError("epsilon must lie in (0, kappa*delta)")
    if not T > 0 or not K_u > 0:
        raise UsageError("T and K_u must be positive")
    grow = math.exp(K_x * T)
    num = kappa * delta - epsilon - grow * delta_start
    return max(num / (K_u * T * grow), 0.0)


def propagation_success_lb(dm, control_space: ControlSpace, p_t: float) -> float:
    """rho = p_t * |B_{du_max}| / |U| in R^D.

    ``dm`` is either the deviation radius itself or a :class:`PropagationParams`.
    """
    if not 0 < p_t <= 1:
        raise UsageError("p_t must lie in (0, 1]")
    du = dm.delta_u_max() if isinstance(dm, PropagationParams) else float(dm)
    if du <= 0:
        return 0.0
    return p_t * ball_volume(control_space.dim, du) / control_space.volume


@dataclass(frozen=True)
class TauChoice:
    feasible: bool
    tau: float | None = None
    ell: int | None = None
    reason: str = ""


def feasibility_margin(K_x, delta, delta_start, kappa, epsilon, tau) -> float:
    return kappa * delta - epsilon - math.exp(K_x * tau) * delta_start


def choose_tau(K_x: float, delta: float, delta_start: float, kappa: float, epsilon: float,
               delta_t: float, T_prop: float | None = None, max_ell: int = 10**7) -> TauChoice:
    """Largest tau = delta_t / ell (ell >= 1) with a positive feasibility margin."""
    if not delta_t > 0:
        raise UsageError("delta_t must be positive")
    limit = kappa * delta - epsilon - delta_start
    if limit <= 0:
        return TauChoice(False, reason=(
            f"kappa*delta - epsilon - delta_start = {limit:.6g} <= 0; "
            "no tau > 0 satisfies the margin"))
    ell = 1
    if K_x > 0:
        tau_star = math.log((kappa * delta - epsilon) / delta_start) / K_x
        ell = max(1, math.floor(delta_t / tau_star))
    min_ell = 1 if T_prop is None else max(1, math.ceil(delta_t / T_prop - 1e-12))
    ell = max(ell, min_ell)
    while ell > min_ell and feasibility_margin(K_x, delta, delta_start, kappa, epsilon, delta_t / (ell - 1)) > 0:
        ell -= 1
    while feasibility_margin(K_x, delta, delta_start, kappa, epsilon, delta_t / ell) <= 0:
        ell += 1
        if ell > max_ell:
            return TauChoice(False, reason="no ell below max_ell satisfies the margin")
    return TauChoice(True, delta_t / ell, ell)


@dataclass
class KinoCover:
    tau: float
    m: int
    centers: np.ndarray
    times: np.ndarray
    delta: float
    kappa: float
    epsilon: float
    delta_start: float
    padded: bool = False


class InfeasibleBound(ValueError):
    pass


def cover_kinodynamic(ref_traj: Trajectory, tau: float, delta: float, kappa: float = 0.4,
                      epsilon: float = 0.01, delta_start: float | None = None,
                      K_x: float = 0.0) -> KinoCover:
    """Centers of the reference trajectory at times 0, tau, 2 tau, ..., t_pi."""
    if delta_start is None:
        delta_start = delta / 5.0
    margin = feasibility_margin(K_x, delta, delta_start, kappa, epsilon, tau)
    if margin <= 0:
        raise InfeasibleBound(
            f"kappa*delta - epsilon - exp(K_x*tau)*delta_start = {margin:.6g} <= 0")
    t_pi = ref_traj.duration
    ratio = t_pi / tau
    m = _ceil_count(ratio)
    padded = abs(ratio - round(ratio)) > 1e-9
    times = np.minimum(np.arange(m + 1) * tau, t_pi)
    times[-1] = t_pi
    centers = np.array([ref_traj.state_at(t) for t in times])
    if padded:
        log.warning("tau does not divide the trajectory duration; last interval is shorter")
    return KinoCover(tau, m, centers, times, delta, kappa, epsilon, delta_start, padded)


def duration_window(ref_traj: Trajectory, t0: float, t1: float, target, epsilon: float,
                    samples: int = 1000) -> float:
    """Measure of {t in [t0, t1] : ||pi(t) - target|| <= epsilon}, on a uniform grid.

    A ball of radius kappa*delta - epsilon around pi(t) sits inside the
    kappa*delta ball around ``target`` exactly when pi(t) is within epsilon
    of ``target``.
    """
    ts = np.linspace(t0, t1, samples + 1)
    S = np.array([ref_traj.state_at(t) for t in ts])
    ok = np.linalg.norm(S - np.asarray(target), axis=1) <= epsilon
    return float(np.count_nonzero(ok[1:]) * (t1 - t0) / samples)


@dataclass
class KinoBound:
    feasible: bool
    reason: str = ""
    tau: float | None = None
    ell: int | None = None
    m: int | None = None
    delta_u_max: float | None = None
    p_t: float | None = None
    rho: float | None = None
    p: float | None = None
    extras: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        if not self.feasible:
            return ["feasible=false", f"reason={self.reason}"]
        return ["feasible=true", f"tau={self.tau!r}", f"ell={self.ell}", f"m={self.m}",
                f"delta_u_max={self.delta_u_max!r}", f"p_t={self.p_t!r}",
                f"rho={self.rho!r}", f"p={self.p!r}"]


def kinodynamic_bound(ref_traj: Trajectory, resolution: float, K_x: float, K_u: float,
                      control_space: ControlSpace, T_prop: float, delta: float, d: int,
                      kappa: float = 0.4, epsilon: float | None = None,
                      delta_start: float | None = None) -> KinoBound:
    """Per-iteration advance probability along a reference trajectory.

    p = |B_{delta/5}| * rho, where rho uses the smallest duration window
    over all cover intervals.
    """
    if delta_start is None:
        delta_start = delta / 5.0
    if epsilon is None:
        epsilon = (kappa * delta - delta_start) / 4.0
        if epsilon <= 0:
            epsilon = kappa * delta / 100.0
    if not 0 < epsilon < kappa * delta:
        return KinoBound(False, f"epsilon={epsilon:.6g} outside (0, kappa*delta)")
    choice = choose_tau(K_x, delta, delta_start, kappa, epsilon, resolution, T_prop)
    if not choice.feasible:
        return KinoBound(False, choice.reason)
    cover = cover_kinodynamic(ref_traj, choice.tau, delta, kappa, epsilon, delta_start, K_x)
    du = control_delta_max(kappa, delta, epsilon, delta_start, K_x, K_u, choice.tau)
    windows = [duration_window(ref_traj, cover.times[i], cover.times[i + 1], cover.centers[i + 1], epsilon)
               for i in range(cover.m)]
    T_kappa = float(min(windows))
    p_t = T_kappa / T_prop
    if p_t <= 0:
        return KinoBound(False, "empty duration window on some cover interval",
                         choice.tau, choice.ell, cover.m, du, 0.0, 0.0, 0.0)
    rho = propagation_success_lb(du, control_space, min(p_t, 1.0))
    p = ball_volume(d, delta / 5.0) * rho
    # rho counts the whole deviation ball as admissible; that only holds when
    # the ball around every reference control stays inside U
    inside = all(control_ball_inside(u, du, control_space) for u in set(ref_traj_controls(ref_traj)))
    return KinoBound(True, "", choice.tau, choice.ell, cover.m, du, p_t, rho, p,
                     {"epsilon": epsilon, "delta_start": delta_start, "kappa": kappa,
                      "control_ball_inside_U": inside})


def ref_traj_controls(ref_traj: Trajectory) -> list:
    if ref_traj.pieces:
        return [tuple(u) for u, _ in ref_traj.pieces]
    return [tuple(row) for row in np.asarray(ref_traj.controls)]


def control_ball_inside(u, radius: float, control_space: ControlSpace) -> bool:
    return all(lo + radius <= c <= hi - radius
               for c, lo, hi in zip(u, control_space.lower, control_space.upper))
