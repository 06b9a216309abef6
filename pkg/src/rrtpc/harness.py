"""Monte Carlo estimates of planner failure probability versus iteration budget.

Each trial runs once with budget max(k_grid) and stops at the first goal
vertex. Because iteration i consumes the same draws whatever the budget,
the run with budget k is a prefix of the longest run, and "reached the goal
within k iterations" is exactly ``first_success_iteration <= k``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from rrtpc import bounds
from rrtpc.dynamics import SystemModel, Trajectory
from rrtpc.environment import Scene, path_clearance
from rrtpc.errors import UsageError
from rrtpc.geom import GeomConfig, geom_rrt
from rrtpc.kino import KinoConfig, kino_rrt
from rrtpc.space import PathPolyline


@dataclass
class ExperimentSpec:
    scene: Scene
    planner: str
    config: GeomConfig | KinoConfig
    k_grid: tuple
    trials_per_k: int
    base_seed: int = 0
    system: SystemModel | None = None
    reference_path: PathPolyline | None = None
    reference_trajectory: Trajectory | None = None
    reference_resolution: float | None = None
    clearance_step: float = 1e-3
    kino_delta_start: float | None = None

    def __post_init__(self):
        if self.planner not in ("geometric", "kinodynamic"):
            raise UsageError(f"planner must be geometric or kinodynamic, got {self.planner}")
        grid = tuple(int(k) for k in self.k_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise UsageError("k_grid must be strictly increasing positive integers")
        self.k_grid = grid
        if self.trials_per_k < 30:
            raise UsageError("trials_per_k must be at least 30")
        if self.planner == "kinodynamic" and self.system is None:
            raise UsageError("kinodynamic experiments need a system")


@dataclass
class Row:
    k: int
    successes: int
    trials: int
    empirical_failure: float
    wilson_ci_low: float
    wilson_ci_high: float
    theoretical_exact: float | None = None
    theoretical_relaxed: float | None = None


@dataclass
class FitResult:
    available: bool
    a_hat: float | None = None
    b_hat: float | None = None
    r2: float | None = None
    points: int = 0


@dataclass
class ExperimentReport:
    rows: list
    fit: FitResult
    theory: dict = field(default_factory=dict)
    first_success: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "successes", "trials", "empirical_failure", "wilson_ci_low",
                    "wilson_ci_high", "theoretical_exact", "theoretical_relaxed"])
        for r in self.rows:
            w.writerow([r.k, r.successes, r.trials, repr(r.empirical_failure),
                        repr(r.wilson_ci_low), repr(r.wilson_ci_high),
                        "NA" if r.theoretical_exact is None else repr(r.theoretical_exact),
                        "NA" if r.theoretical_relaxed is None else repr(r.theoretical_relaxed)])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"{key}={value!r}" if not isinstance(value, str) else f"{key}={value}"
                 for key, value in self.theory.items()]
        if self.fit.available:
            lines += [f"a_hat={self.fit.a_hat!r}", f"b_hat={self.fit.b_hat!r}",
                      f"r2={self.fit.r2!r}", f"fit_points={self.fit.points}"]
        else:
            lines += ["fit=unavailable", f"fit_points={self.fit.points}"]
        verdict = compare_bound(self)
        lines.append(f"verdict={verdict.overall}")
        return "\n".join(lines) + "\n"

    def plot_data(self) -> str:
        out = ["# k,ln_failure,ln_bound"]
        for r in self.rows:
            lf = math.log(r.empirical_failure) if r.empirical_failure > 0 else -math.inf
            lb = math.log(r.theoretical_exact) if r.theoretical_exact else (
                -math.inf if r.theoretical_exact == 0 else math.nan)
            out.append(f"{r.k},{lf!r},{lb!r}")
        return "\n".join(out) + "\n"


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        raise UsageError("trials must be positive")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if successes == 0 else max(0.0, float(centre - half))
    high = 1.0 if successes == trials else min(1.0, float(centre + half))
    return low, high


def _trial(args):
    spec, seed = args
    k = spec.k_grid[-1]
    if spec.planner == "geometric":
        cfg = replace(spec.config, k=k, seed=seed, stop_on_goal=True)
        res = geom_rrt(spec.scene, cfg)
    else:
        cfg = replace(spec.config, k=k, seed=seed, stop_on_goal=True)
        res = kino_rrt(spec.scene, spec.system, cfg)
    return res.first_success_iteration


def geometric_theory(spec: ExperimentSpec) -> dict:
    path = spec.reference_path
    delta_clear = path_clearance(spec.scene, path, spec.clearance_step)
    if delta_clear <= 0:
        return {"theory": "unavailable", "theory_reason": "reference path not free"}
    cover = bounds.cover_geometric(path, delta_clear, spec.scene.goal.radius,
                                   spec.config.eta, spec.scene.dim)
    return {"theory": "geometric", "delta_clear": delta_clear, "delta": cover.delta,
            "nu": cover.nu, "L": path.length, "m": cover.m, "p": cover.p}


def kinodynamic_theory(spec: ExperimentSpec, delta_start: float | None = None) -> dict:
    traj = spec.reference_trajectory
    sysm = spec.system
    delta_clear = trajectory_clearance(spec.scene, traj, spec.clearance_step)
    delta = min(delta_clear, spec.scene.goal.radius)
    kb = bounds.kinodynamic_bound(traj, spec.reference_resolution, sysm.K_x, sysm.K_u,
                                  sysm.control_space, spec.config.T_prop, delta, spec.scene.dim,
                                  delta_start=delta_start)
    out = {"theory": "kinodynamic", "delta_clear": delta_clear, "delta": delta,
           "delta_start": delta / 5.0 if delta_start is None else delta_start}
    if not kb.feasible:
        out.update({"feasible": "false", "infeasible_reason": kb.reason})
        return out
    out.update({"feasible": "true", "tau": kb.tau, "ell": kb.ell, "m": kb.m,
                "delta_u_max": kb.delta_u_max, "p_t": kb.p_t, "rho": kb.rho, "p": kb.p,
                "control_ball_inside_U": str(kb.extras["control_ball_inside_U"]).lower()})
    return out


def trajectory_clearance(scene: Scene, traj: Trajectory, step: float = 1e-3) -> float:
    """Sampled clearance along the chords of a stored trajectory."""
    return path_clearance(scene, PathPolyline(_dedupe(traj.states)), step)


def _dedupe(states: np.ndarray) -> np.ndarray:
    keep = np.concatenate([[True], np.any(np.diff(states, axis=0) != 0, axis=1)])
    return states[keep]


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentReport:
    seeds = [spec.base_seed + i for i in range(spec.trials_per_k)]
    tasks = [(spec, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            firsts = list(pool.map(_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        firsts = [_trial(t) for t in tasks]

    theory: dict = {}
    if spec.planner == "geometric" and spec.reference_path is not None:
        theory = geometric_theory(spec)
    elif spec.planner == "kinodynamic" and spec.reference_trajectory is not None:
        theory = kinodynamic_theory(spec, spec.kino_delta_start)
    p, m = theory.get("p"), theory.get("m")
    have_theory = isinstance(p, float) and 0 < p < 1 and isinstance(m, int)

    rows = []
    n = spec.trials_per_k
    for k in spec.k_grid:
        succ = sum(1 for f in firsts if f is not None and f <= k)
        fail = n - succ
        lo, hi = wilson_interval(fail, n)
        row = Row(k, succ, n, fail / n, lo, hi)
        if have_theory:
            row.theoretical_exact = bounds.failure_prob_exact(p, m, k)
            rel = bounds.failure_prob_relaxed(p, m, k)
            row.theoretical_relaxed = rel.value if rel.valid else None
        rows.append(row)
    return ExperimentReport(rows, fit_exponential(rows), theory, firsts)


def fit_exponential(rows, lo: float = 0.02, hi: float = 0.98) -> FitResult:
    """Least-squares fit of ln(failure) = ln(a) - b k over unsaturated rows."""
    pts = [(r.k, r.empirical_failure) for r in rows if lo <= r.empirical_failure <= hi]
    if len(pts) < 3:
        return FitResult(False, points=len(pts))
    k = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(k, y, 1)
    resid = y - (intercept + slope * k)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(True, math.exp(intercept), -slope, r2, len(pts))


@dataclass
class Verdict:
    per_k: list
    overall: str


def compare_bound(report: ExperimentReport) -> Verdict:
    """PASS per row when the failure CI's lower end does not exceed the exact tail."""
    per_k = []
    for r in report.rows:
        if r.theoretical_exact is None:
            per_k.append((r.k, "NA"))
        else:
            per_k.append((r.k, "PASS" if r.wilson_ci_low <= r.theoretical_exact else "FAIL"))
    verdicts = {v for _, v in per_k}
    if "FAIL" in verdicts:
        overall = "FAIL"
    elif verdicts == {"PASS"}:
        overall = "PASS"
    else:
        overall = "NA"
    return Verdict(per_k, overall)
