import numpy as np
import pytest

from MTE.bifurcation.branch import continue_branch
from MTE.bifurcation.instants import instant_for_ratio
from MTE.errors import IntegrationError
from MTE.lift.torus import embedding_check, lift, mesh_area, project_mesh, torus_area
from MTE.reduction.geodesic_flow import integrate
from MTE.reduction.metric_profile import build_geometry


@pytest.fixture(scope="module")
def b11_trajectory(geometry_half, b11_root):
    return integrate(geometry_half, b11_root.s, 1)


@pytest.fixture(scope="module")
def b12_trajectory():
    branch = continue_branch(instant_for_ratio(0.5), 1, {"max_points": 3})
    p = branch.points[-1]
    return integrate(build_geometry(p.a), p.s, 2)


"""
Clifford torus
"""


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_clifford_lift(a):
    g = build_geometry(a)
    mesh = lift(g, integrate(g, 0.0, 1), n_t=64, n_psi=16, label=(0, 0))
    assert mesh.shape == (65, 16)
    assert mesh.max_residual <= 1e-12
    assert mesh.closing_gap <= 1e-10
    z2 = (mesh.vertices[..., 0] ** 2 + mesh.vertices[..., 1] ** 2) / a**2
    w2 = mesh.vertices[..., 2] ** 2 + mesh.vertices[..., 3] ** 2
    assert np.allclose(z2, 0.5, atol=1e-10)
    assert np.allclose(w2, 0.5, atol=1e-10)
    assert mesh.label == (0, 0)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_clifford_area(a):
    g = build_geometry(a)
    traj = integrate(g, 0.0, 1)
    assert torus_area(g, traj) == pytest.approx(2 * np.pi**2 * a, rel=1e-9)
    assert mesh_area(lift(g, traj, n_t=256, n_psi=128)) == pytest.approx(2 * np.pi**2 * a, rel=1e-3)


def test_area_of_double_cover(geometry_two):
    assert torus_area(geometry_two, integrate(geometry_two, 0.0, 2)) == pytest.approx(2 * 4 * np.pi**2, rel=1e-9)


def test_mesh_area_converges(geometry_two):
    traj = integrate(geometry_two, 0.0, 1)
    exact = 4 * np.pi**2
    coarse = abs(mesh_area(lift(geometry_two, traj, n_t=32, n_psi=16)) - exact)
    fine = abs(mesh_area(lift(geometry_two, traj, n_t=64, n_psi=32)) - exact)
    # second order: halving both spacings quarters the error
    assert coarse / fine == pytest.approx(4.0, abs=0.2)


def test_lift_is_psi_rotation_invariant(geometry_half, b11_trajectory):
    mesh = lift(geometry_half, b11_trajectory, n_t=32, n_psi=12)
    base = mesh.vertices[:, 0]
    for j, psi in enumerate(mesh.psi):
        c, s = np.cos(psi), np.sin(psi)
        rotated = np.column_stack([base[:, 0], base[:, 1], c * base[:, 2] - s * base[:, 3], s * base[:, 2] + c * base[:, 3]])
        assert np.allclose(mesh.vertices[:, j], rotated, atol=1e-14)


"""
Nontrivial tori
"""


def test_b11_lift(geometry_half, b11_trajectory):
    mesh = lift(geometry_half, b11_trajectory)
    assert mesh.max_residual <= 1e-12
    assert mesh.closing_gap <= 1e-8
    area = torus_area(geometry_half, b11_trajectory)
    assert mesh_area(mesh) == pytest.approx(area, rel=5e-3)
    # the Clifford torus is a competitor with area 2 pi^2 a
    assert area != pytest.approx(2 * np.pi**2 * 0.5, rel=1e-6)


def test_project_mesh(geometry_half, b11_trajectory):
    mesh = lift(geometry_half, b11_trajectory, n_t=64, n_psi=8)
    rho, theta = project_mesh(geometry_half, mesh)
    st = b11_trajectory.states(mesh.t)
    assert np.allclose(rho, st["rho"], atol=1e-9)
    assert np.allclose(theta, st["theta"], atol=1e-9)


def test_project_mesh_rejects_broken_symmetry(geometry_half, b11_trajectory):
    mesh = lift(geometry_half, b11_trajectory, n_t=16, n_psi=8)
    mesh.vertices[3, 1, 2] *= 0.5
    with pytest.raises(ValueError):
        project_mesh(geometry_half, mesh)


def test_lift_rejects_open_trajectory(geometry_two):
    with pytest.raises(IntegrationError):
        lift(geometry_two, integrate(geometry_two, 0.3, 1))


def test_lift_rejects_small_grid(geometry_two):
    with pytest.raises(ValueError):
        lift(geometry_two, integrate(geometry_two, 0.0, 1), n_t=2)


"""
Embeddedness
"""


def test_clifford_embedded(geometry_round):
    report = embedding_check(integrate(geometry_round, 0.0, 1))
    assert report.embedded
    assert report.crossing_points == []


def test_b11_embedded(b11_trajectory):
    assert embedding_check(b11_trajectory).embedded


def test_b12_crosses_on_diameter(b12_trajectory):
    report = embedding_check(b12_trajectory)
    assert not report.embedded
    assert len(report.crossing_points) == 1
    assert report.on_diameter
    assert report.max_offset <= 1e-8
    ((t1, t2),) = report.crossing_times
    assert abs(t1) == pytest.approx(abs(t2), abs=1e-8)
