"""Reduced geometry of the ellipsoid S^3_a = {|z|^2/a^2 + |w|^2 = 1}.

The orbit space of the circle action on the second factor is a disk
Omega_a. In polar coordinates its metric reads

    drho^2 + varphi(rho)^2 dtheta^2,

where rho is the arclength along a radial geodesic from the center,
parametrized by the latitude angle phi in [0, pi/2]:

    rho(phi) = 2 pi int_0^phi cos(xi) sqrt(a^2 cos^2 xi + sin^2 xi) dxi,
    varphi(rho) = pi a sin(2 phi(rho)).

The boundary rho = L_a is singular (varphi' -> -inf), the center rho = 0
is smooth (varphi'(0) = 1).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from MTE.config import get_defaults
from MTE.errors import SingularBoundaryError
from MTE.utils.newton import safeguarded_newton
from MTE.utils.quadrature import adaptive_panel_integrals, chebyshev_edges, gauss_legendre_intervals

logger = logging.getLogger(__name__)

QUARTER_PI = np.pi / 4
HALF_PI = np.pi / 2


@dataclass(frozen=True, eq=False)
class EllipsoidGeometry:
    """All derived geometry of Omega_a for a fixed eccentricity ``a``.

    ``phi_nodes``/``rho_nodes`` hold the arclength table on Chebyshev
    nodes of [0, pi/2]; values between nodes are obtained by integrating
    the remainder of the panel with the same Gauss–Legendre order.
    """

    a: float
    L_a: float
    rho_clifford: float
    phi_nodes: np.ndarray
    rho_nodes: np.ndarray
    quad_tol: float
    quad_order: int
    guard_band: float


def _check_eccentricity(a: float) -> None:
    if not np.isfinite(a) or a <= 0:
        raise ValueError(f"Eccentricity a must be positive, got {a}")


def rho_prime(a: float, phi):
    """d rho / d phi = 2 pi cos(phi) sqrt(a^2 cos^2 phi + sin^2 phi)."""
    c = np.cos(phi)
    s = np.sin(phi)
    return 2 * np.pi * c * np.sqrt(a * a * c * c + s * s)


def rho_second(a: float, phi):
    c = np.cos(phi)
    s = np.sin(phi)
    w = np.sqrt(a * a * c * c + s * s)
    return 2 * np.pi * (-s * w + c * c * s * (1 - a * a) / w)


def rho_closed_form(a: float, phi):
    """Elementary antiderivative of the arclength map.

    With u = sin(xi) the integral becomes
    2 pi int_0^{sin phi} sqrt(a^2 + (1 - a^2) u^2) du, which is an
    asinh-type expression for a < 1 and an arcsin-type one for a > 1.
    Used as an independent oracle for the quadrature table.
    """
    _check_eccentricity(a)
    u = np.sin(np.asarray(phi, dtype=float))
    A = a * a
    B = 1.0 - A
    root = np.sqrt(A + B * u * u)
    if abs(B) < 1e-14:
        tail = 0.5 * u * np.sqrt(A)
    elif B > 0:
        tail = A / (2 * np.sqrt(B)) * np.arcsinh(u * np.sqrt(B / A))
    else:
        tail = A / (2 * np.sqrt(-B)) * np.arcsin(u * np.sqrt(-B / A))
    return 2 * np.pi * (0.5 * u * root + tail)


@lru_cache(maxsize=64)
def build_geometry(a: float, quad_tol: float = 1e-12, n_table: int | None = None, guard_band: float | None = None) -> EllipsoidGeometry:
    """Build the arclength table of Omega_a and its derived constants.

    Parameters
    ----------
    a : float
        Eccentricity, a > 0 (b is fixed to 1).
    quad_tol : float
        Absolute tolerance for the accumulated arclength table.
    n_table : int, optional
        Number of Chebyshev nodes on [0, pi/2].
    guard_band : float, optional
        Relative width of the band below L_a where varphi' is refused.

    Returns
    -------
    EllipsoidGeometry

    Examples
    --------
    >>> g = build_geometry(1.0)
    >>> round(g.L_a, 12) == round(2 * np.pi, 12)
    True
    """
    _check_eccentricity(a)
    if not quad_tol > 0:
        raise ValueError(f"Quadrature tolerance must be positive, got {quad_tol}")
    defaults = get_defaults()["geometry"]
    n_table = int(n_table or defaults["n_table"])
    guard_band = float(guard_band or defaults["guard_band"])
    if n_table < 3:
        raise ValueError(f"Arclength table needs at least 3 nodes, got {n_table}")

    phi_nodes = chebyshev_edges(0.0, HALF_PI, n_table)
    panels, err, order = adaptive_panel_integrals(lambda x: rho_prime(a, x), phi_nodes, quad_tol)
    if err > quad_tol:
        logger.warning("Arclength table for a=%s reached error estimate %.3e above quad_tol=%.1e", a, err, quad_tol)
    rho_nodes = np.concatenate([[0.0], np.cumsum(panels)])
    L_a = float(rho_nodes[-1])
    geometry = EllipsoidGeometry(
        a=float(a),
        L_a=L_a,
        rho_clifford=0.0,
        phi_nodes=phi_nodes,
        rho_nodes=rho_nodes,
        quad_tol=float(quad_tol),
        quad_order=order,
        guard_band=guard_band,
    )
    rho_clifford = float(rho_of_phi(geometry, QUARTER_PI))
    # frozen dataclass: set the derived constant once
    object.__setattr__(geometry, "rho_clifford", rho_clifford)
    logger.debug("Built geometry a=%s: L_a=%.15g rho_clifford=%.15g (order %d)", a, L_a, rho_clifford, order)
    return geometry


def rho_of_phi(g: EllipsoidGeometry, phi):
    """Arclength radius at latitude angle ``phi`` (vectorised)."""
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr < 0) or np.any(phi_arr > HALF_PI):
        raise ValueError(f"Latitude angle must lie in [0, pi/2], got {phi}")
    flat = np.atleast_1d(phi_arr).ravel()
    idx = np.clip(np.searchsorted(g.phi_nodes, flat, side="right") - 1, 0, len(g.phi_nodes) - 2)
    rest = gauss_legendre_intervals(lambda x: rho_prime(g.a, x), g.phi_nodes[idx], flat, g.quad_order)
    values = g.rho_nodes[idx] + rest
    if phi_arr.ndim == 0:
        return float(values[0])
    return values.reshape(phi_arr.shape)


def _check_radius(g: EllipsoidGeometry, rho: float) -> float:
    slack = 10 * g.quad_tol
    if not (-slack <= rho <= g.L_a + slack):
        raise ValueError(f"Radius rho={rho} outside [0, L_a={g.L_a}]")
    return min(max(float(rho), 0.0), g.L_a)


def phi_of_rho(g: EllipsoidGeometry, rho):
    """Inverse of the arclength map, phi(rho) in [0, pi/2].

    Safeguarded Newton inside the table panel containing ``rho``;
    near L_a, where d rho/d phi vanishes, the iteration degrades to
    bisection.
    """
    if np.ndim(rho):
        return np.array([phi_of_rho(g, r) for r in np.ravel(rho)]).reshape(np.shape(rho))
    r = _check_radius(g, rho)
    if r == 0.0:
        return 0.0
    if r == g.L_a:
        return HALF_PI
    i = int(np.clip(np.searchsorted(g.rho_nodes, r, side="right") - 1, 0, len(g.rho_nodes) - 2))
    lo, hi = g.phi_nodes[i], g.phi_nodes[i + 1]

    def residual(x):
        return rho_of_phi(g, x) - r, float(rho_prime(g.a, x))

    return float(safeguarded_newton(residual, lo, hi, tol=1e-15))


def varphi_of_phi(a: float, phi):
    return np.pi * a * np.sin(2 * phi)


def dvarphi_of_phi(a: float, phi):
    """varphi'(rho) written in the latitude chart."""
    return 2 * np.pi * a * np.cos(2 * phi) / rho_prime(a, phi)


def varphi(g: EllipsoidGeometry, rho) -> float:
    """Profile function varphi(rho) = pi a sin(2 phi(rho))."""
    return float(varphi_of_phi(g.a, phi_of_rho(g, rho)))


def varphi_derivs(g: EllipsoidGeometry, rho) -> tuple[float, float]:
    """First and second rho-derivatives of varphi.

    Raises ``SingularBoundaryError`` within ``guard_band * L_a`` of the
    boundary, where varphi' diverges.
    """
    r = _check_radius(g, rho)
    if r > g.L_a * (1 - g.guard_band):
        raise SingularBoundaryError(f"varphi' requested at rho={rho} inside the guard band of L_a={g.L_a}")
    phi = phi_of_rho(g, r)
    rp = rho_prime(g.a, phi)
    dphi = 1.0 / rp
    d2phi = -rho_second(g.a, phi) / rp**3
    s2, c2 = np.sin(2 * phi), np.cos(2 * phi)
    first = 2 * np.pi * g.a * c2 * dphi
    second = -4 * np.pi * g.a * s2 * dphi * dphi + 2 * np.pi * g.a * c2 * d2phi
    return float(first), float(second)


def _check_shooting_parameter(s: float) -> None:
    if not -1 < s < 1:
        raise ValueError(f"Shooting parameter s must lie in (-1, 1), got {s}")


def phi_of_s(s: float) -> float:
    """Latitude angle of the start point beta_a(s): (1 + s) pi/4."""
    _check_shooting_parameter(s)
    return (1 + s) * QUARTER_PI


def s_of_phi(phi: float) -> float:
    return 4 * phi / np.pi - 1


def beta(g: EllipsoidGeometry, s: float) -> float:
    """Start radius beta_a(s) = rho((1 + s) pi/4) on the radial segment
    sigma(0); beta_a(0) is the Clifford radius."""
    return float(rho_of_phi(g, phi_of_s(s)))


def beta_inverse(g: EllipsoidGeometry, rho: float) -> float:
    return float(s_of_phi(phi_of_rho(g, rho)))


def beta_prime(g: EllipsoidGeometry, s: float = 0.0) -> float:
    """beta_a'(s); at s = 0 this is pi^2 sqrt(a^2 + 1) / 4."""
    return float(rho_prime(g.a, phi_of_s(s)) * QUARTER_PI)


def clifford_length(a: float) -> float:
    """Length of the Clifford geodesic, equal to the area 2 pi^2 a of the
    Clifford torus."""
    return 2 * np.pi**2 * a


def clifford_speed(a: float) -> float:
    """Speed of gamma_{a,0}, i.e. varphi(rho_{a,0}) = pi a."""
    return np.pi * a


def volume_function(a: float, z_abs):
    """Length 2 pi sqrt(1 - |z|^2/a^2) of the circle orbit through a
    point of the quotient."""
    _check_eccentricity(a)
    return 2 * np.pi * np.sqrt(np.clip(1 - np.asarray(z_abs) ** 2 / a**2, 0.0, None))


def orbit_space_point(a: float, phi, theta):
    """Point (x, y, r) of the quotient {|z|^2/a^2 + r^2 = 1, r >= 0} with
    z = x + iy, at latitude ``phi`` and angle ``theta``."""
    return a * np.cos(theta) * np.sin(phi), a * np.sin(theta) * np.sin(phi), np.cos(phi)
