import io

import numpy as np
import pytest

from oracles import extension_fixture, nearest_in_ball_fixture
from rrtpc.environment import Scene, is_segment_free, load_scene, segment_free
from rrtpc.errors import UsageError
from rrtpc.geom import GeomConfig, extend, geom_rrt, new_state, read_path_csv, write_path_csv
from rrtpc.nn import PointIndex
from rrtpc.space import Ball, PathPolyline
from rrtpc.tree import PlanResult, SinglePointPath, Tree, extract_path

OPEN2D_SUCCESSES_K5000 = 200  # frozen: seeds 0..199, eta 0.2


@pytest.mark.parametrize("x_rand,x_near,eta,expected", [
    ((0.5, 0), (0, 0), 1, (0.5, 0)),
    ((2, 0), (0, 0), 1, (1, 0)),
    ((0.3, 0.4), (0, 0), 0.25, (0.15, 0.2)),
])
def test_new_state(x_rand, x_near, eta, expected):
    np.testing.assert_allclose(new_state(x_rand, x_near, eta), expected, atol=1e-15)


def test_new_state_degenerate():
    assert new_state((0.2, 0.2), (0.2, 0.2), 0.1) == (0.2, 0.2)


def test_config_validation():
    with pytest.raises(UsageError):
        GeomConfig(0, 0.1)
    with pytest.raises(UsageError):
        GeomConfig(10, 0.0)


def test_start_in_goal():
    sc = Scene(2, (), (0.5, 0.5), Ball((0.5, 0.5), 0.1))
    res = geom_rrt(sc, GeomConfig(100, 0.1, stop_on_goal=True))
    assert res.success and res.first_success_iteration == 0 and len(res.tree) == 1
    path = extract_path(res)
    assert isinstance(path, SinglePointPath) and path.length == 0.0


def _vertex_bytes(res):
    return res.tree.states.tobytes(), tuple(res.tree.parent)


def test_determinism(corridor):
    cfg = GeomConfig(3000, 0.1, seed=42)
    a, b = geom_rrt(corridor, cfg), geom_rrt(corridor, cfg)
    assert _vertex_bytes(a) == _vertex_bytes(b)
    assert (a.success, a.first_success_iteration) == (b.success, b.first_success_iteration)
    c = geom_rrt(corridor, GeomConfig(3000, 0.1, seed=43))
    assert _vertex_bytes(c) != _vertex_bytes(a)


def test_linear_and_accelerated_runs_identical(corridor):
    cfg = GeomConfig(3000, 0.05, seed=3)
    assert _vertex_bytes(geom_rrt(corridor, cfg)) == _vertex_bytes(geom_rrt(corridor, cfg, accelerated=False))


@pytest.mark.parametrize("seed", range(5))
def test_tree_validity(corridor, seed):
    eta = 0.07
    res = geom_rrt(corridor, GeomConfig(2000, eta, seed=seed))
    S = res.tree.states
    assert np.array_equal(S[0], corridor.x_init)
    for p, c in res.tree.edges():
        assert p < c
        assert np.linalg.norm(S[c] - S[p]) <= eta + 1e-12
        assert is_segment_free(corridor, S[p], S[c])
    assert res.iterations_executed == 2000


def test_extract_path(corridor):
    res = geom_rrt(corridor, GeomConfig(5000, 0.1, seed=0, stop_on_goal=True))
    assert res.success
    path = extract_path(res)
    assert np.array_equal(path.waypoints[0], corridor.x_init)
    assert corridor.goal.contains(path.waypoints[-1])
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        assert is_segment_free(corridor, a, b)


def test_extract_three_vertex_chain():
    t = Tree((0.1, 0.1))
    t.add((0.2, 0.1), 0)
    t.add((0.5, 0.5), 0)
    t.add((0.3, 0.1), 1)
    res = PlanResult(t, True, 3, 3, 3)
    np.testing.assert_array_equal(extract_path(res).waypoints, [(0.1, 0.1), (0.2, 0.1), (0.3, 0.1)])


def test_extract_path_failure():
    res = PlanResult(Tree((0.1, 0.1)), False, None, None, 10)
    with pytest.raises(UsageError):
        extract_path(res)


def test_prefix_equivalence(corridor):
    # a stop-on-goal run is a prefix of the full run with the same seed
    full = geom_rrt(corridor, GeomConfig(1500, 0.1, seed=11))
    early = geom_rrt(corridor, GeomConfig(1500, 0.1, seed=11, stop_on_goal=True))
    assert full.first_success_iteration == early.first_success_iteration
    n = len(early.tree)
    assert np.array_equal(full.tree.states[:n], early.tree.states)
    assert full.goal_vertex == early.goal_vertex


def test_open2d_regression():
    sc = load_scene("open2d")
    wins = sum(geom_rrt(sc, GeomConfig(5000, 0.2, seed=s, stop_on_goal=True)).success for s in range(200))
    assert wins == OPEN2D_SUCCESSES_K5000


def test_path_csv_roundtrip():
    p = PathPolyline([(0.1, 0.2), (0.3, 0.4), (0.5, 0.25)])
    buf = io.StringIO()
    write_path_csv(p, 9, buf)
    assert buf.getvalue().startswith("# geom-rrt path d=2 seed=9\n")
    np.testing.assert_array_equal(read_path_csv(buf.getvalue()).waypoints, p.waypoints)


def check_extension(rng, dim, nu, eta):
    scene, verts, x_i, x_rand = extension_fixture(rng, dim, nu)
    tree = Tree(verts[0])
    for v in verts[1:]:
        tree.add(v, 0)
    n_before = len(tree)
    near, x_new, vid = extend(tree, scene.obstacles, tuple(x_rand), eta)
    x_near = tree.states[near]
    return (np.linalg.norm(x_near - x_i) <= nu
            and segment_free(scene.obstacles, tuple(x_near), tuple(x_rand))
            and np.array_equal(np.array(x_new), x_rand)
            and vid == n_before)


def check_nearest_in_ball(rng, dim, delta):
    x, verts, x_rand = nearest_in_ball_fixture(rng, dim, delta)
    idx = PointIndex(dim)
    for v in verts:
        idx.insert(v)
    return np.linalg.norm(idx.points[idx.nearest(x_rand)] - x) <= delta


def test_extension_property_sample(rng):
    assert all(check_extension(rng, (2, 3)[i % 2], 0.1, 0.1 + 0.1 * (i % 3)) for i in range(100))


def test_nearest_in_ball_sample(rng):
    assert all(check_nearest_in_ball(rng, (2, 3, 6)[i % 3], 0.05 + 0.1 * rng.random()) for i in range(100))
