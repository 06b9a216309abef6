"""Reference solutions shipped next to the built-in scenes.

``<name>.path.csv`` holds a witness polyline for a geometric scene;
``<name>.controls.csv`` holds a piecewise-constant witness control for a
kinodynamic scene, with the system and resolution in a header comment.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from rrtpc.dynamics import PiecewiseConstantControl, SystemModel, make_system, rollout
from rrtpc.environment import load_scene
from rrtpc.errors import UsageError
from rrtpc.geom import read_path_csv

_ROOT = resources.files("rrtpc") / "scenes"


def _read(ref: str | Path, suffix: str) -> str:
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    res = _ROOT / f"{ref}{suffix}"
    if not res.is_file():
        raise UsageError(f"no reference file '{ref}{suffix}'")
    return res.read_text(encoding="utf-8")


def reference_path(ref):
    return read_path_csv(_read(ref, ".path.csv"))


def read_controls(text: str) -> tuple[str, PiecewiseConstantControl]:
    header = " ".join(line for line in text.splitlines() if line.startswith("#"))
    sys_m = re.search(r"system=(\S+)", header)
    res_m = re.search(r"resolution=(\S+)", header)
    if not (sys_m and res_m):
        raise UsageError("controls file needs 'system=' and 'resolution=' in a header comment")
    dt = float(res_m.group(1))
    pieces = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            pieces.append(([float(c) for c in line.split(",")], dt))
    return sys_m.group(1), PiecewiseConstantControl(tuple(pieces), dt)


def reference_trajectory(ref, h_max: float = 1e-3):
    """(system, control, trajectory) for a shipped kinodynamic witness."""
    sys_spec, control = read_controls(_read(ref, ".controls.csv"))
    system: SystemModel = make_system(sys_spec)
    scene = load_scene(ref)
    traj = rollout(system, scene.x_init, control, h_max)
    return system, control, traj
