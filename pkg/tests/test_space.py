import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrtpc.errors import UsageError
from rrtpc.space import (Ball, PathPolyline, arc_length, ball_volume, distance,
                         log_ball_volume, point_at_arclength)


@pytest.mark.parametrize("a,b,expected", [
    ((0, 0), (0, 0), 0.0),
    ((0, 0), (3, 4), 5.0),
    ((0.1, 0.2, 0.3), (0.4, 0.6, 0.3), 0.5),
])
def test_distance(a, b, expected):
    assert distance(a, b) == pytest.approx(expected, abs=1e-12)
    assert distance(b, a) == distance(a, b)


def test_distance_dimension_mismatch():
    with pytest.raises(UsageError):
        distance((0, 0), (0, 0, 0))


@pytest.mark.parametrize("d,r,expected", [(2, 1.0, math.pi), (1, 0.5, 1.0), (3, 1.0, 4 * math.pi / 3)])
def test_ball_volume(d, r, expected):
    assert ball_volume(d, r) == pytest.approx(expected, rel=1e-12)


def test_ball_volume_rejects_bad_input():
    with pytest.raises(UsageError):
        ball_volume(0, 1.0)
    with pytest.raises(UsageError):
        ball_volume(2, 0.0)


coords = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=300)
@given(st.lists(st.tuples(coords, coords, coords), min_size=3, max_size=3))
def test_triangle_inequality(pts):
    a, b, c = pts
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12


@settings(max_examples=200)
@given(st.integers(1, 20), st.floats(1e-3, 10.0))
def test_ball_volume_scaling(d, r):
    lhs = log_ball_volume(d, r)
    rhs = log_ball_volume(d, 1.0) + d * math.log(r)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


@pytest.mark.parametrize("pts,expected", [
    ([(0, 0), (1, 0)], 1.0),
    ([(0, 0), (1, 0), (1, 1)], 2.0),
    ([(0, 0), (0.3, 0.4)], 0.5),
])
def test_arc_length(pts, expected):
    assert arc_length(PathPolyline(pts)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("pts,s,expected", [
    ([(0, 0), (1, 0)], 0.0, (0, 0)),
    ([(0, 0), (1, 0)], 0.25, (0.25, 0)),
    ([(0, 0), (1, 0), (1, 1)], 1.5, (1, 0.5)),
])
def test_point_at_arclength(pts, s, expected):
    np.testing.assert_allclose(point_at_arclength(PathPolyline(pts), s), expected, atol=1e-12)


def test_point_at_arclength_out_of_range():
    p = PathPolyline([(0, 0), (1, 0)])
    with pytest.raises(UsageError):
        p.point_at(1.5)
    with pytest.raises(UsageError):
        p.point_at(-0.1)


def test_polyline_validation():
    with pytest.raises(UsageError):
        PathPolyline([(0, 0)])
    with pytest.raises(UsageError):
        PathPolyline([(0, 0), (0, 0), (1, 0)])


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=8, unique=True))
def test_end_of_polyline(pts):
    try:
        path = PathPolyline(pts)
    except UsageError:
        return
    np.testing.assert_allclose(path.point_at(path.length), path.waypoints[-1], atol=1e-12)


def test_ball_open_membership():
    b = Ball((0.5, 0.5), 0.25)
    assert b.contains((0.5, 0.625))
    assert not b.contains((0.5, 0.75))
    assert b.contains((0.5, 0.75), closed=True)
    with pytest.raises(UsageError):
        Ball((0.5, 0.5), 0.0)
