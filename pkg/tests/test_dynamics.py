import math

import numpy as np
import pytest

from oracles import sample_ball
from rrtpc.dynamics import (CATALOG, ControlSpace, PiecewiseConstantControl, double_integrator,
                            euler_endpoints, kinematic_car, lipschitz_probe, make_system, propagate,
                            rollout, scalar_linear, single_integrator)
from rrtpc.errors import IntegrationError, UsageError


@pytest.mark.parametrize("h_max", [1e-1, 1e-3, 0.37])
def test_single_integrator_exact(h_max):
    traj = propagate(single_integrator(2), (0.0, 0.0), (1.0, 0.0), 0.5, h_max)
    np.testing.assert_allclose(traj.end, (0.5, 0.0), atol=1e-14)
    assert traj.duration == 0.5


def test_scalar_linear_zero_stays_zero():
    assert abs(propagate(scalar_linear(1.0), (0.0,), (0.0,), 1.0, 1e-5).end[0]) <= 1e-4


def test_scalar_linear_closed_form():
    assert propagate(scalar_linear(1.0), (0.1,), (0.0,), 1.0, 1e-5).end[0] == pytest.approx(0.1 * math.e, abs=1e-4)


def test_propagate_errors():
    sys = single_integrator(2)
    with pytest.raises(UsageError):
        propagate(sys, (0.0, 0.0), (1.0, 0.0), 0.0)
    with pytest.raises(UsageError):
        propagate(sys, (0.0, 0.0, 0.0), (1.0, 0.0), 0.1)
    with pytest.raises(IntegrationError):
        propagate(scalar_linear(1e3), (1.0,), (0.0,), 10.0, 1e-2)


def test_rollout_single_piece_is_propagate():
    sys = scalar_linear(0.5)
    a = propagate(sys, (0.2,), (0.3,), 0.5, 1e-3)
    b = rollout(sys, (0.2,), PiecewiseConstantControl((((0.3,), 0.5),), 0.5), 1e-3)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.times, b.times)


def test_rollout_two_pieces():
    ctrl = PiecewiseConstantControl((((1.0, 0.0), 0.5), ((0.0, 1.0), 0.5)), 0.5)
    traj = rollout(single_integrator(2), (0.0, 0.0), ctrl)
    np.testing.assert_allclose(traj.end, (0.5, 0.5), atol=1e-14)
    np.testing.assert_allclose(traj.state_at(0.5), (0.5, 0.0), atol=1e-14)


def test_rollout_double_integrator_physical():
    sys = double_integrator(vmax=2.0, umax=1.0)
    z0 = sys.from_physical([0.0, 0.0, 0.0, 0.0])
    traj = rollout(sys, z0, PiecewiseConstantControl((((1.0, 0.0), 1.0),), 1.0), h_max=1e-4)
    np.testing.assert_allclose(sys.to_physical(traj.end), (0.5, 0.0, 1.0, 0.0), atol=1e-4)


def test_piecewise_validation():
    with pytest.raises(UsageError):
        PiecewiseConstantControl((), 0.5)
    with pytest.raises(UsageError):
        PiecewiseConstantControl((((1.0,), 0.4),), 0.5)


def test_euler_convergence_order():
    sys = scalar_linear(1.0)
    hs = [1e-2, 1e-3, 1e-4]
    errs = [abs(propagate(sys, (0.1,), (0.0,), 1.0, h).end[0] - 0.1 * math.e) for h in hs]
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 0.95


def test_batch_matches_scalar_path():
    rng = np.random.default_rng(0)
    for name, make in CATALOG.items():
        sys = make()
        X0 = rng.random((5, sys.state_dim))
        U = rng.uniform(-1, 1, (5, sys.control_dim))
        T = rng.uniform(0.1, 1.0, 5)
        batch = euler_endpoints(sys, X0, U, T, 50)
        for i in range(5):
            ref = propagate(sys, X0[i], U[i], T[i], T[i] / 50 * (1 + 1e-12)).end
            np.testing.assert_allclose(batch[i], ref, rtol=0, atol=1e-13, err_msg=name)


def divergence_violations(sys, n, rng, T_prop=1.0, delta_max=0.1):
    """Count pairs exceeding the divergence bound (h = 1e-4 T, 10^4 Euler steps)."""
    d, D = sys.state_dim, sys.control_dim
    lo, hi = np.array(sys.control_space.lower), np.array(sys.control_space.upper)
    X0 = rng.random((n, d))
    delta = delta_max * rng.random(n)
    X1 = X0 + sample_ball(rng, np.zeros(d), 1.0, n) * delta[:, None]
    U0 = lo + (hi - lo) * rng.random((n, D))
    U1 = lo + (hi - lo) * rng.random((n, D))
    T = T_prop * (1.0 - rng.random(n))
    E0 = euler_endpoints(sys, X0, U0, T, 10_000)
    E1 = euler_endpoints(sys, X1, U1, T, 10_000)
    gap = np.linalg.norm(E0 - E1, axis=1)
    d0 = np.linalg.norm(X0 - X1, axis=1)
    du = np.linalg.norm(U0 - U1, axis=1)
    eKT = np.exp(sys.K_x * T)
    bound = eKT * d0 + sys.K_u * T * eKT * du
    return int(np.sum(gap > bound + 1e-6))


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_divergence_bound_sample(name):
    assert divergence_violations(CATALOG[name](), 500, np.random.default_rng(1)) == 0


def tightness_gap(h=1e-6, x0=0.1, delta=0.05, T=1.0):
    sys = scalar_linear(1.0, umax=1.0)
    E = euler_endpoints(sys, [[x0], [x0 + delta]], [[0.0], [0.0]], T, int(round(T / h)))
    measured = abs(E[1, 0] - E[0, 0])
    return abs(measured - math.exp(sys.K_x * T) * delta)


def test_tightness_witness():
    assert tightness_gap() <= 1e-6


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_lipschitz_probe(name):
    rep = lipschitz_probe(CATALOG[name](), 20_000, seed=3)
    assert rep.ok, rep


def test_lipschitz_exact_ratios():
    si = lipschitz_probe(single_integrator(3), 1000, 0)
    assert si.max_ratio_x == 0.0 and si.max_ratio_u == pytest.approx(1.0, abs=1e-12)
    sl = lipschitz_probe(scalar_linear(-2.5), 1000, 0)
    assert sl.max_ratio_x == pytest.approx(2.5, abs=1e-12)
    assert sl.max_ratio_u == pytest.approx(1.0, abs=1e-12)


def test_car_probe_near_declared():
    rep = lipschitz_probe(kinematic_car(), 100_000, seed=5)
    assert rep.ok and rep.max_ratio_x > 0.8 * rep.declared_K_x


def test_make_system():
    sys = make_system("double_integrator:vmax=0.2,umax=0.02")
    assert sys.K_x == pytest.approx(0.4) and sys.K_u == pytest.approx(2.5)
    assert make_system("single_integrator:dim=3").state_dim == 3
    for bad in ("warp_drive", "scalar_linear:a", "scalar_linear:b=2"):
        with pytest.raises(UsageError):
            make_system(bad)


def test_control_space():
    cs = ControlSpace([-1, -2], [1, 2])
    assert cs.volume == 8.0 and cs.dim == 2
    assert cs.contains((0.5, -2.0)) and not cs.contains((1.5, 0.0))
    with pytest.raises(UsageError):
        ControlSpace([1], [1])


def test_physical_roundtrip():
    for sys in (double_integrator(0.3, 1.0), kinematic_car()):
        z = np.random.default_rng(0).random((10, sys.state_dim))
        np.testing.assert_allclose(sys.from_physical(sys.to_physical(z)), z, atol=1e-14)
