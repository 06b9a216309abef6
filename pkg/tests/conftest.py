import numpy as np
import pytest

from rrtpc.environment import load_scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corridor():
    return load_scene("corridor2d")


KINO_SYSTEM = "double_integrator:vmax=0.2,umax=0.02"
KINO_K_GRID = (5_000, 20_000, 80_000)


def kino_spec(trials=100, delta_start=None):
    from rrtpc.dynamics import make_system
    from rrtpc.fixtures import reference_trajectory
    from rrtpc.harness import ExperimentSpec
    from rrtpc.kino import KinoConfig

    scene = load_scene("dint_open")
    _, control, traj = reference_trajectory("dint_open")
    return ExperimentSpec(scene, "kinodynamic", KinoConfig(1, 0.5, h_max=0.01), KINO_K_GRID,
                          trials, 0, system=make_system(KINO_SYSTEM), reference_trajectory=traj,
                          reference_resolution=control.resolution, kino_delta_start=delta_start)


@pytest.fixture(scope="session")
def kino_report():
    """The double-integrator experiment, shared by regression and acceptance tests."""
    import time

    from rrtpc.harness import run_experiment
    t0 = time.perf_counter()
    report = run_experiment(kino_spec())
    KINO_TIMING["seconds"] = time.perf_counter() - t0
    return report


KINO_TIMING: dict = {}


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, ok, detail):
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
