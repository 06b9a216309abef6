"""Command-line entry point: ``rrtpc <subcommand> ...``.

Exit status: 0 on success (a planner that finds no path still exits 0 and
prints ``success=false``), 2 on usage errors, 1 on runtime errors.
Set RRTPC_LOG to error, info or debug for log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from rrtpc import bounds
from rrtpc.dynamics import CATALOG, make_system
from rrtpc.environment import load_scene, path_clearance
from rrtpc.errors import ParseError, UsageError
from rrtpc.fixtures import reference_path, reference_trajectory
from rrtpc.geom import GeomConfig, geom_rrt, write_path_csv
from rrtpc.harness import ExperimentSpec, compare_bound, run_experiment, trajectory_clearance
from rrtpc.kino import KinoConfig, kino_rrt, write_edges_csv
from rrtpc.tree import extract_controls, extract_path

log = logging.getLogger("rrtpc")


def _uint64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _k_grid(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rrtpc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("plan-geom", help="run geometric RRT on a scene", formatter_class=fmt)
    p.add_argument("--scene", required=True, help="scene file or built-in fixture name")
    p.add_argument("--k", type=_positive_int, required=True, help="iteration budget")
    p.add_argument("--eta", type=_positive_float, required=True, help="steering step length")
    p.add_argument("--seed", type=_uint64, required=True, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--out", help="write the solution path as CSV")
    p.add_argument("--no-stop-on-goal", dest="stop_on_goal", action="store_false",
                   help="run all k iterations even after reaching the goal")

    p = sub.add_parser("plan-kino", help="run kinodynamic RRT on a scene", formatter_class=fmt)
    p.add_argument("--scene", required=True, help="scene file or built-in fixture name")
    p.add_argument("--system", required=True, help="catalog name, optionally name:key=val,...")
    p.add_argument("--k", type=_positive_int, required=True, help="iteration budget")
    p.add_argument("--tprop", type=_positive_float, required=True, help="maximum propagation duration")
    p.add_argument("--seed", type=_uint64, required=True, help="RNG seed (unsigned 64-bit)")
    p.add_argument("--h-max", type=_positive_float, default=1e-3, help="Euler step cap")
    p.add_argument("--out", help="write tree edges as CSV")
    p.add_argument("--no-stop-on-goal", dest="stop_on_goal", action="store_false",
                   help="run all k iterations even after reaching the goal")

    p = sub.add_parser("bound", help="binomial failure bounds for given p, m, k", formatter_class=fmt)
    p.add_argument("--p", type=float, required=True, help="per-iteration advance probability")
    p.add_argument("--m", type=_positive_int, required=True, help="number of cover balls to advance through")
    p.add_argument("--k", type=_positive_int, required=True, help="iteration budget")

    p = sub.add_parser("cover", help="ball cover of a reference path", formatter_class=fmt)
    p.add_argument("--scene", required=True, help="scene file or built-in fixture name")
    p.add_argument("--path", help="reference path CSV (defaults to the fixture's)")
    p.add_argument("--eta", type=_positive_float, required=True, help="steering step length")
    p.add_argument("--step", type=_positive_float, default=1e-3, help="clearance sampling step")
    p.add_argument("--out", help="write centers as CSV (default stdout)")

    p = sub.add_parser("experiment", help="failure probability versus k", formatter_class=fmt)
    p.add_argument("--scene", required=True, help="scene file or built-in fixture name")
    p.add_argument("--system", help="kinodynamic system; omit for geometric RRT")
    p.add_argument("--eta", type=_positive_float, default=0.1, help="geometric steering step")
    p.add_argument("--tprop", type=_positive_float, default=0.5, help="kinodynamic maximum duration")
    p.add_argument("--h-max", type=_positive_float, default=1e-3, help="kinodynamic Euler step cap")
    p.add_argument("--k-grid", type=_k_grid, required=True, help="comma-separated iteration budgets")
    p.add_argument("--trials", type=_positive_int, default=200, help="trials per budget (at least 30)")
    p.add_argument("--seed", type=_uint64, required=True, help="base seed; trial i uses seed+i")
    p.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--reference", help="reference path / controls file (defaults to the fixture's)")
    p.add_argument("--literal-delta-start", action="store_true",
                   help="kinodynamic theory with start radius delta instead of delta/5")
    p.add_argument("--out", help="write the per-k report CSV")
    p.add_argument("--emit-plot-data", metavar="PATH", help="write k, ln failure, ln bound")

    sub.add_parser("systems", help="list the shipped dynamical systems", formatter_class=fmt)
    return parser


def _open_out(path):
    return open(path, "w", encoding="utf-8", newline="\n")


def cmd_plan_geom(args) -> int:
    scene = load_scene(args.scene)
    res = geom_rrt(scene, GeomConfig(args.k, args.eta, args.seed, args.stop_on_goal))
    print(f"success={'true' if res.success else 'false'}")
    print(f"iterations={res.iterations_executed}")
    print(f"vertices={len(res.tree)}")
    if res.success:
        print(f"first_success_iteration={res.first_success_iteration}")
        path = extract_path(res)
        print(f"path_waypoints={len(path.waypoints)}")
        print(f"path_length={path.length!r}")
        if args.out:
            with _open_out(args.out) as fh:
                write_path_csv(path, args.seed, fh)
    return 0


def cmd_plan_kino(args) -> int:
    scene = load_scene(args.scene)
    system = make_system(args.system)
    cfg = KinoConfig(args.k, args.tprop, args.seed, h_max=args.h_max, stop_on_goal=args.stop_on_goal)
    res = kino_rrt(scene, system, cfg)
    print(f"success={'true' if res.success else 'false'}")
    print(f"iterations={res.iterations_executed}")
    print(f"vertices={len(res.tree)}")
    if res.success:
        print(f"first_success_iteration={res.first_success_iteration}")
        controls = extract_controls(res)
        print(f"path_edges={len(controls)}")
        print(f"path_duration={sum(t for _, t in controls)!r}")
    if args.out:
        with _open_out(args.out) as fh:
            write_edges_csv(res, system.control_dim, fh)
    return 0


def cmd_bound(args) -> int:
    for line in bounds.bound_report(args.p, args.m, args.k).lines():
        print(line)
    return 0


def cmd_cover(args) -> int:
    scene = load_scene(args.scene)
    path = reference_path(args.path or args.scene)
    clear = path_clearance(scene, path, args.step)
    if clear <= 0:
        raise UsageError("reference path is not collision-free")
    cover = bounds.cover_geometric(path, clear, scene.goal.radius, args.eta, scene.dim)
    print(f"delta_clear={clear!r}")
    print(f"nu={cover.nu!r}")
    print(f"m={cover.m}")
    print(f"p={cover.p!r}")
    text = "".join(",".join(repr(float(c)) for c in row) + "\n" for row in cover.centers)
    if args.out:
        with _open_out(args.out) as fh:
            fh.write(f"# cover centers m={cover.m} spacing={cover.spacing!r}\n" + text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    scene = load_scene(args.scene)
    ref = args.reference or args.scene
    if args.system:
        ref_system, control, traj = reference_trajectory(ref)
        system = make_system(args.system)
        if (system.name, system.params) != (ref_system.name, ref_system.params):
            raise UsageError(f"--system {args.system} does not match the reference "
                             f"({ref_system.name} {ref_system.params})")
        delta_start = None
        if args.literal_delta_start:
            delta_start = min(scene.goal.radius, trajectory_clearance(scene, traj))
        spec = ExperimentSpec(scene, "kinodynamic", KinoConfig(1, args.tprop, h_max=args.h_max),
                              args.k_grid, args.trials, args.seed, system=system,
                              reference_trajectory=traj, reference_resolution=control.resolution,
                              kino_delta_start=delta_start)
    else:
        spec = ExperimentSpec(scene, "geometric", GeomConfig(1, args.eta), args.k_grid,
                              args.trials, args.seed, reference_path=reference_path(ref))
    report = run_experiment(spec, jobs=args.jobs)
    sys.stdout.write(report.to_csv())
    sys.stdout.write(report.summary())
    for k, v in compare_bound(report).per_k:
        print(f"verdict_k{k}={v}")
    if args.out:
        with _open_out(args.out) as fh:
            fh.write(report.to_csv())
            fh.write("".join(f"# {line}\n" for line in report.summary().splitlines()))
    if args.emit_plot_data:
        with _open_out(args.emit_plot_data) as fh:
            fh.write(report.plot_data())
    return 0


def cmd_systems(args) -> int:
    for name, factory in CATALOG.items():
        s = factory()
        print(f"{name}: d={s.state_dim} D={s.control_dim} K_x={s.K_x!r} K_u={s.K_u!r} "
              f"U=[{', '.join(f'{a:g}..{b:g}' for a, b in zip(s.control_space.lower, s.control_space.upper))}] "
              f"params={s.params}")
    return 0


COMMANDS = {
    "plan-geom": cmd_plan_geom,
    "plan-kino": cmd_plan_kino,
    "bound": cmd_bound,
    "cover": cmd_cover,
    "experiment": cmd_experiment,
    "systems": cmd_systems,
}


def main(argv=None) -> int:
    level = os.environ.get("RRTPC_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParseError) as exc:
        print(f"rrtpc: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and exit 1
        log.debug("runtime failure", exc_info=True)
        print(f"rrtpc: runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
