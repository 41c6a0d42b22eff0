"""Lift of a closed geodesic of Omega_a to an S^1-invariant torus in the
ellipsoid |z|^2/a^2 + |w|^2 = 1 of C^2 = R^4.

A point (rho, theta) of the orbit space at latitude phi = phi(rho) lifts
to the circle z = a sin(phi) e^{i theta}, w = cos(phi) e^{i psi}. The
area of the lifted torus equals the length of the geodesic in Omega_a.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from MTE.config import get_defaults
from MTE.errors import IntegrationError
from MTE.reduction.geodesic_flow import Trajectory
from MTE.reduction.metric_profile import EllipsoidGeometry, rho_of_phi, varphi_of_phi
from MTE.utils.quadrature import gauss_legendre_panels
from MTE.utils.segments import closed_polyline_intersections

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TorusMesh:
    """Vertices (Re z, Im z, Re w, Im w) on the grid ``t x psi``.

    ``t`` runs over [-ell_k, ell_k] with both ends included (the rows
    coincide); ``psi`` covers [0, 2 pi) without repeating 2 pi.
    """

    a: float
    s: float
    k: int
    t: np.ndarray
    psi: np.ndarray
    vertices: np.ndarray
    residual: np.ndarray
    label: tuple[int, int] | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.vertices.shape[:2]

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def closing_gap(self) -> float:
        """Distance between the first and the last t-row."""
        return float(np.max(np.abs(self.vertices[0] - self.vertices[-1])))


def _check_closed(traj: Trajectory, closed_tol: float) -> float:
    ell = traj.ell(traj.k_target)
    f_value = float(traj.raw(ell)[2])
    if abs(f_value) > closed_tol:
        raise IntegrationError(f"Trajectory a={traj.a}, s={traj.s} is not closed after k={traj.k_target}: rho'(ell_k)={f_value:.3e}")
    return ell


def lift(
    g: EllipsoidGeometry,
    traj: Trajectory,
    n_t: int | None = None,
    n_psi: int | None = None,
    closed_tol: float | None = None,
    label: tuple[int, int] | None = None,
) -> TorusMesh:
    """Sample the torus swept by the circle orbits over a closed geodesic.

    Parameters
    ----------
    g : EllipsoidGeometry
        Geometry the trajectory was integrated in.
    traj : Trajectory
        Converged closed geodesic, integrated up to its k-th crossing.
    n_t : int, optional
        Samples in t per winding, so the grid has ``n_t * k + 1`` rows.
    n_psi : int, optional
        Samples of the circle coordinate.
    closed_tol : float, optional
        Largest accepted |rho'(ell_k)|.
    label : tuple of int, optional
        Branch label (j, k) carried along for export.

    Returns
    -------
    TorusMesh
    """
    defaults = get_defaults()
    n_t = int(n_t or defaults["lift"]["n_t"])
    n_psi = int(n_psi or defaults["lift"]["n_psi"])
    if n_t < 4 or n_psi < 3:
        raise ValueError(f"Mesh needs n_t >= 4 and n_psi >= 3, got {n_t} x {n_psi}")
    ell = _check_closed(traj, closed_tol or defaults["shooting"]["closed_tol"])

    t = np.linspace(-ell, ell, n_t * traj.k_target + 1)
    psi = np.linspace(0.0, 2 * np.pi, n_psi, endpoint=False)
    y = traj.raw(t)
    phi, theta = y[0], y[1]
    radius_z = g.a * np.sin(phi)
    radius_w = np.cos(phi)
    vertices = np.empty((len(t), n_psi, 4))
    vertices[..., 0] = (radius_z * np.cos(theta))[:, None]
    vertices[..., 1] = (radius_z * np.sin(theta))[:, None]
    vertices[..., 2] = radius_w[:, None] * np.cos(psi)[None, :]
    vertices[..., 3] = radius_w[:, None] * np.sin(psi)[None, :]
    residual = (vertices[..., 0] ** 2 + vertices[..., 1] ** 2) / g.a**2 + vertices[..., 2] ** 2 + vertices[..., 3] ** 2 - 1
    mesh = TorusMesh(a=g.a, s=traj.s, k=traj.k_target, t=t, psi=psi, vertices=vertices, residual=residual, label=label)
    logger.debug("Lifted a=%s s=%s k=%d to %d x %d vertices", g.a, traj.s, traj.k_target, len(t), n_psi)
    return mesh


def torus_area(g: EllipsoidGeometry, traj: Trajectory, order: int = 16, panels_per_turn: int = 64) -> float:
    """Length of the closed geodesic over [-ell_k, ell_k] in the metric
    of Omega_a, which is the area of the lifted torus.

    Examples
    --------
    The Clifford torus has area 2 pi^2 a:

    >>> from MTE.reduction.geodesic_flow import integrate
    >>> from MTE.reduction.metric_profile import build_geometry
    >>> g = build_geometry(2.0)
    >>> bool(np.isclose(torus_area(g, integrate(g, 0.0, 1)), 4 * np.pi**2))
    True
    """
    ell = traj.ell(traj.k_target)

    def speed(t):
        y = traj.raw(t.ravel())
        v = varphi_of_phi(g.a, y[0])
        return np.sqrt(y[2] ** 2 + (v * y[3]) ** 2).reshape(t.shape)

    edges = np.linspace(-ell, ell, panels_per_turn * traj.k_target + 1)
    return float(gauss_legendre_panels(speed, edges, order).sum())


def mesh_area(mesh: TorusMesh) -> float:
    """Sum of the triangle areas of the quad grid in R^4, using the Gram
    determinant |u|^2 |v|^2 - (u.v)^2 of each triangle's edge vectors."""
    v = mesh.vertices
    p00 = v[:-1]
    p10 = v[1:]
    p01 = np.roll(v[:-1], -1, axis=1)
    p11 = np.roll(v[1:], -1, axis=1)

    def triangles(p, q, r):
        u = q - p
        w = r - p
        uu = np.sum(u * u, axis=-1)
        ww = np.sum(w * w, axis=-1)
        uw = np.sum(u * w, axis=-1)
        return 0.5 * np.sqrt(np.clip(uu * ww - uw * uw, 0.0, None))

    return float(np.sum(triangles(p00, p10, p11)) + np.sum(triangles(p00, p11, p01)))


def project_mesh(g: EllipsoidGeometry, mesh: TorusMesh) -> tuple[np.ndarray, np.ndarray]:
    """Quotient map back to Omega_a: (z, w) -> (z, |w|) -> (rho, theta).

    Returns the t-rows as ``(rho, theta)`` with theta unwrapped, taken
    from the psi = 0 column after checking that every column agrees.
    """
    v = mesh.vertices
    abs_z = np.hypot(v[..., 0], v[..., 1])
    abs_w = np.hypot(v[..., 2], v[..., 3])
    phi = np.arctan2(abs_z / g.a, abs_w)
    spread = float(np.max(np.ptp(phi, axis=1)))
    if spread > 1e-12:
        raise ValueError(f"Mesh is not S^1-invariant: latitude varies by {spread:.3e} along a circle orbit")
    theta = np.unwrap(np.arctan2(v[:, 0, 1], v[:, 0, 0]))
    theta += np.round((-mesh.k * np.pi - theta[0]) / (2 * np.pi)) * 2 * np.pi
    return rho_of_phi(g, phi[:, 0]), theta


@dataclass(frozen=True)
class EmbeddingReport:
    """Self-intersections of the planar curve (rho cos theta, rho sin
    theta); ``on_diameter`` tells whether all of them lie on the line
    theta in {0, pi}."""

    embedded: bool
    crossing_points: list[tuple[float, float]] = field(default_factory=list)
    crossing_times: list[tuple[float, float]] = field(default_factory=list)
    on_diameter: bool = True
    max_offset: float = 0.0


def _planar(traj: Trajectory, t) -> tuple[np.ndarray, np.ndarray]:
    """Planar position and velocity of the curve at times ``t``."""
    st = traj.states(t)
    rho, theta = st["rho"], st["theta"]
    c, s = np.cos(theta), np.sin(theta)
    pos = np.column_stack([rho * c, rho * s])
    vel = np.column_stack([st["rho_dot"] * c - rho * st["theta_dot"] * s, st["rho_dot"] * s + rho * st["theta_dot"] * c])
    return pos, vel


def _refine(traj: Trajectory, t1: float, t2: float, max_iter: int = 20) -> tuple[float, float]:
    """Newton on P(t1) - P(t2) = 0 for the planar curve P."""
    for _ in range(max_iter):
        pos, vel = _planar(traj, [t1, t2])
        residual = pos[0] - pos[1]
        if np.max(np.abs(residual)) < 1e-14:
            break
        jac = np.column_stack([vel[0], -vel[1]])
        try:
            d1, d2 = np.linalg.solve(jac, residual)
        except np.linalg.LinAlgError:
            break
        t1 -= d1
        t2 -= d2
    return float(t1), float(t2)


def embedding_check(traj: Trajectory, samples_per_turn: int | None = None, diameter_tol: float = 1e-8) -> EmbeddingReport:
    """Sweep the closed planar curve over [-ell_k, ell_k] for segment
    crossings, then polish every crossing with Newton on the dense
    output."""
    n = int(samples_per_turn or get_defaults()["shooting"]["samples_per_turn"]) * 2 * traj.k_target
    ell = traj.ell(traj.k_target)
    t = np.linspace(-ell, ell, n + 1)
    pos, _ = _planar(traj, t)
    pos[-1] = pos[0]
    points = []
    times = []
    for crossing in closed_polyline_intersections(pos):
        t1 = t[crossing.i] + crossing.t * (t[crossing.i + 1] - t[crossing.i])
        t2 = t[crossing.j] + crossing.u * (t[crossing.j + 1] - t[crossing.j])
        t1, t2 = _refine(traj, t1, t2)
        p, _ = _planar(traj, [t1])
        points.append((float(p[0, 0]), float(p[0, 1])))
        times.append((t1, t2))
    max_offset = max((abs(p[1]) for p in points), default=0.0)
    return EmbeddingReport(
        embedded=not points,
        crossing_points=points,
        crossing_times=times,
        on_diameter=max_offset <= diameter_tol,
        max_offset=max_offset,
    )
