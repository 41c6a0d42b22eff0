import numpy as np
import pytest

from MTE.errors import IntegrationError
from MTE.reduction.geodesic_flow import GeodesicState, clairaut, ell_k, energy, geodesic_rhs, integrate, sample_rows
from MTE.reduction.metric_profile import beta, build_geometry, varphi, varphi_derivs


def test_geodesic_rhs_clifford(geometry_two):
    state = GeodesicState(t=0.0, rho=geometry_two.rho_clifford, theta=0.0, rho_dot=0.0, theta_dot=1.0)
    rho_dot, theta_dot, rho_ddot, theta_ddot = geodesic_rhs(geometry_two, state)
    assert (rho_dot, theta_dot) == (0.0, 1.0)
    assert rho_ddot == pytest.approx(0.0, abs=1e-9)
    assert theta_ddot == pytest.approx(0.0, abs=1e-9)


def test_geodesic_rhs_radial(geometry_half):
    state = GeodesicState(t=0.0, rho=1.0, theta=0.3, rho_dot=1.0, theta_dot=0.0)
    assert geodesic_rhs(geometry_half, state)[2:] == (0.0, 0.0)


def test_geodesic_rhs_generic(geometry_half):
    state = GeodesicState(t=0.0, rho=2.0, theta=0.0, rho_dot=0.4, theta_dot=0.7)
    v = varphi(geometry_half, 2.0)
    dv, _ = varphi_derivs(geometry_half, 2.0)
    _, _, rho_ddot, theta_ddot = geodesic_rhs(geometry_half, state)
    assert rho_ddot == pytest.approx(v * dv * 0.49)
    assert theta_ddot == pytest.approx(-2 * dv / v * 0.4 * 0.7)


def test_first_integrals(geometry_half):
    clifford = GeodesicState(t=0.0, rho=geometry_half.rho_clifford, theta=0.0, rho_dot=0.0, theta_dot=1.0)
    assert clairaut(geometry_half, clifford) == pytest.approx((np.pi * 0.5) ** 2, abs=1e-9)
    assert energy(geometry_half, clifford) == pytest.approx((np.pi * 0.5) ** 2, abs=1e-9)
    radial = GeodesicState(t=0.0, rho=1.0, theta=0.0, rho_dot=1.0, theta_dot=0.0)
    assert clairaut(geometry_half, radial) == 0.0
    assert energy(geometry_half, radial) == 1.0


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_clifford_trajectory(a):
    g = build_geometry(a)
    traj = integrate(g, 0.0, 3)
    for m in range(1, 4):
        assert traj.ell(m) == pytest.approx(m * np.pi, abs=1e-10)
    st = traj.states(np.linspace(0, 3 * np.pi, 31))
    assert np.allclose(st["rho"], g.rho_clifford, atol=1e-9)
    assert np.allclose(st["theta"], st["t"], atol=1e-9)


def test_crossing_events(geometry_half):
    traj = integrate(geometry_half, 0.3, 4)
    times = [t for _, t in traj.crossing_events]
    assert [m for m, _ in traj.crossing_events] == [1, 2, 3, 4]
    assert np.all(np.diff(times) > 0)
    for m, t_m in traj.crossing_events:
        assert traj.state(t_m).theta == pytest.approx(m * np.pi, abs=1e-10)


def test_conservation(geometry_two):
    for s in (-0.6, 0.2, 0.7):
        traj = integrate(geometry_two, s, 4)
        assert traj.clairaut_drift <= 1e-9
        assert traj.energy_drift <= 1e-9
        start, end = traj.state(0.0), traj.state(traj.ell(4))
        assert clairaut(geometry_two, end) == pytest.approx(clairaut(geometry_two, start), rel=1e-8)


def test_initial_data(geometry_half):
    traj = integrate(geometry_half, -0.4, 1)
    state = traj.state(0.0)
    assert state.rho == pytest.approx(beta(geometry_half, -0.4), abs=1e-12)
    assert (state.theta, state.rho_dot, state.theta_dot) == pytest.approx((0.0, 0.0, 1.0), abs=1e-15)
    assert traj.clairaut0 == pytest.approx(varphi(geometry_half, state.rho) ** 2)


def test_theta_monotone(geometry_half):
    traj = integrate(geometry_half, 0.6, 3)
    st = traj.states(np.linspace(-traj.ell(3), traj.ell(3), 2001))
    assert np.all(st["theta_dot"] > 0)
    assert np.all((st["rho"] > 0) & (st["rho"] < geometry_half.L_a))


def test_reflection_symmetry(geometry_two):
    forward = integrate(geometry_two, 0.35, 2)
    backward = integrate(geometry_two, 0.35, 2, direction=-1)
    assert backward.ell(2) == pytest.approx(forward.ell(2), abs=1e-9)
    for t in np.linspace(0.1, forward.ell(2), 7):
        plus = forward.state(t)
        minus = backward.state(-t)
        assert minus.rho == pytest.approx(plus.rho, abs=1e-8)
        assert minus.theta == pytest.approx(-plus.theta, abs=1e-8)
        assert minus.rho_dot == pytest.approx(-plus.rho_dot, abs=1e-8)
        assert minus.theta_dot == pytest.approx(plus.theta_dot, abs=1e-8)
        mirrored = forward.state(-t)
        assert mirrored.theta == pytest.approx(-plus.theta)


def test_ell_k_increasing(geometry_half):
    assert ell_k(geometry_half, 0.3, 2) > ell_k(geometry_half, 0.3, 1) > 0


def test_ell_k_against_tight_reference(geometry_half):
    reference = ell_k(geometry_half, 0.3, 1, {"rtol": 1e-13, "atol": 1e-15})
    assert ell_k(geometry_half, 0.3, 1) == pytest.approx(reference, abs=1e-8)


def test_tolerance_convergence(geometry_half):
    reference = ell_k(geometry_half, 0.5, 1, {"rtol": 1e-13, "atol": 1e-15})
    coarse = abs(ell_k(geometry_half, 0.5, 1, {"rtol": 1e-6, "atol": 1e-8, "drift_tol": 1e-3}) - reference)
    fine = abs(ell_k(geometry_half, 0.5, 1, {"rtol": 1e-10, "atol": 1e-12, "drift_tol": 1e-3}) - reference)
    assert fine < coarse


@pytest.mark.parametrize("s, k", [(1.0, 1), (-1.0, 1), (1 - 1e-10, 1), (0.1, 0)])
def test_integrate_rejects(geometry_half, s, k):
    with pytest.raises(ValueError):
        integrate(geometry_half, s, k)


def test_step_budget(geometry_half):
    with pytest.raises(IntegrationError):
        integrate(geometry_half, 0.3, 3, {"max_steps": 2})


def test_sample_rows(geometry_half):
    traj = integrate(geometry_half, 0.3, 1)
    rows = sample_rows(traj, n=11, symmetric=True)
    assert rows.shape == (11, 7)
    assert rows[0, 0] == pytest.approx(-traj.ell(1))
    assert rows[-1, 2] == pytest.approx(np.pi, abs=1e-10)
    assert np.all(rows[:, 5:] <= 1e-9)
