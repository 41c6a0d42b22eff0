"""Shooting function f_k(a, s) and classification of its roots.

f_k(a, s) is the radial velocity of gamma_{a,s} at its k-th crossing of
the diameter D(0). The geodesic gamma_{a,s} closes up after 2 ell_k
exactly when f_k(a, s) = 0, by the reflection symmetry about D(0).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from MTE.bifurcation.instants import check_label, instant_value, jacobi_frequency, transversality_target
from MTE.config import get_defaults
from MTE.errors import NoSignChangeError, NumericalError
from MTE.reduction.geodesic_flow import Trajectory, integrate
from MTE.reduction.metric_profile import QUARTER_PI, EllipsoidGeometry, beta_prime, build_geometry, rho_prime

logger = logging.getLogger(__name__)

# ODE tolerances for finite-difference derivatives of f_k
DERIVATIVE_ODE = {"rtol": 1e-12, "atol": 1e-14}


@dataclass(frozen=True)
class ShootingResult:
    a: float
    s: float
    k: int
    f_value: float
    ell_k: float
    converged: bool = True
    iterations: int = 0


def _shooting_settings(shooting_cfg: dict | None) -> dict:
    settings = dict(get_defaults()["shooting"])
    settings.update(shooting_cfg or {})
    return settings


def _result(traj: Trajectory, k: int, converged: bool = True, iterations: int = 0) -> ShootingResult:
    ell = traj.ell(k)
    return ShootingResult(
        a=traj.a,
        s=traj.s,
        k=k,
        f_value=float(traj.raw(ell)[2]),
        ell_k=ell,
        converged=converged,
        iterations=iterations,
    )


def shoot(g: EllipsoidGeometry, s: float, k: int, cfg: dict | None = None) -> tuple[ShootingResult, Trajectory]:
    """Integrate gamma_{a,s} to its k-th crossing and return both the
    shooting value and the trajectory."""
    traj = integrate(g, s, k, cfg)
    return _result(traj, k), traj


def f_k(g: EllipsoidGeometry, s: float, k: int, cfg: dict | None = None) -> ShootingResult:
    """f_k(a, s) = rho'_{a,s}(ell_k(a, s)).

    Examples
    --------
    >>> g = build_geometry(0.8)
    >>> abs(f_k(g, 0.0, 1).f_value) < 1e-12
    True
    """
    return shoot(g, s, k, cfg)[0]


def jacobi_solution(g: EllipsoidGeometry, t):
    """Radial Jacobi field along the Clifford geodesic,
    R(t) = beta'(0) cos(omega t), with omega = 2a/sqrt(a^2 + 1).

    Returns ``(R(t), R'(t))``.
    """
    omega = jacobi_frequency(g.a)
    amplitude = beta_prime(g, 0.0)
    t = np.asarray(t, dtype=float)
    return amplitude * np.cos(omega * t), -amplitude * omega * np.sin(omega * t)


def closed_form_dfds(g: EllipsoidGeometry, k: int) -> float:
    """d f_k / ds at s = 0, i.e. R'(k pi)."""
    return float(jacobi_solution(g, k * np.pi)[1])


@dataclass(frozen=True)
class DerivativeCheck:
    a: float
    k: int
    h: float
    finite_difference: float
    closed_form: float

    @property
    def relative_error(self) -> float:
        scale = abs(self.closed_form)
        diff = abs(self.finite_difference - self.closed_form)
        return diff / scale if scale > 0 else diff


def dfds_at_zero(g: EllipsoidGeometry, k: int, h: float | None = None, cfg: dict | None = None) -> DerivativeCheck:
    """Centered difference (f_k(a, h) - f_k(a, -h)) / 2h next to its
    closed form from the Jacobi field.

    Integrations use ``DERIVATIVE_ODE`` tolerances unless ``cfg`` is given.
    """
    if h is None:
        h = get_defaults()["shooting"]["h_s"]
    if not 0 < h < 0.5:
        raise ValueError(f"Difference step h must lie in (0, 0.5), got {h}")
    ode = DERIVATIVE_ODE if cfg is None else cfg
    plus = f_k(g, h, k, ode).f_value
    minus = f_k(g, -h, k, ode).f_value
    return DerivativeCheck(a=g.a, k=int(k), h=float(h), finite_difference=(plus - minus) / (2 * h), closed_form=closed_form_dfds(g, k))


def find_root(
    g: EllipsoidGeometry,
    k: int,
    s_bracket: tuple[float, float],
    cfg: dict | None = None,
    shooting_cfg: dict | None = None,
) -> ShootingResult:
    """Bracketed Brent root of s -> f_k(a, s) inside ``s_bracket``.

    Raises
    ------
    NoSignChangeError
        If f_k has the same sign at both ends of the bracket.
    NumericalError
        If Brent's method does not converge.
    """
    settings = _shooting_settings(shooting_cfg)
    lo, hi = sorted(float(x) for x in s_bracket)
    if lo == hi:
        raise ValueError(f"Degenerate bracket [{lo}, {hi}]")
    f_lo = f_k(g, lo, k, cfg).f_value
    f_hi = f_k(g, hi, k, cfg).f_value
    for s_end, f_end in ((lo, f_lo), (hi, f_hi)):
        if f_end == 0.0:
            return f_k(g, s_end, k, cfg)
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChangeError(f"f_{k}(a={g.a}, s) has no sign change on [{lo}, {hi}]: f={f_lo:.3e}, {f_hi:.3e}")

    root, info = brentq(
        lambda s: f_k(g, s, k, cfg).f_value,
        lo,
        hi,
        xtol=settings["xtol"],
        rtol=4 * np.finfo(float).eps,
        maxiter=200,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise NumericalError(f"Root search for f_{k} at a={g.a} on [{lo}, {hi}] did not converge: {info.flag}")
    res, _ = shoot(g, root, k, cfg)
    converged = abs(res.f_value) <= settings["root_tol"]
    if not converged:
        logger.warning("Root s=%.15g of f_%d at a=%s has residual %.3e above root_tol", root, k, g.a, res.f_value)
    return ShootingResult(a=res.a, s=res.s, k=res.k, f_value=res.f_value, ell_k=res.ell_k, converged=converged, iterations=info.iterations)


def scan_sign_changes(g: EllipsoidGeometry, k: int, s_values, cfg: dict | None = None) -> list[tuple[float, float]]:
    """Consecutive grid points of ``s_values`` between which f_k changes
    sign."""
    s_grid = np.asarray(s_values, dtype=float)
    f = np.array([f_k(g, s, k, cfg).f_value for s in s_grid])
    flips = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    return [(float(s_grid[i]), float(s_grid[i + 1])) for i in flips]


@dataclass(frozen=True)
class GeodesicClassification:
    """Discrete invariants of a closed geodesic gamma_{a,s}.

    ``winding`` refers to the primitive closed geodesic; ``f_lower`` holds
    the raw values f_{k'}(a, s) for 0 < k' < k.
    """

    a: float
    s: float
    k: int
    f_value: float
    is_closed: bool
    is_simple: bool
    is_primitive: bool
    winding: int
    clifford_intersections: int
    self_intersections_on_diameter: int
    star_shaped: bool
    degenerate: bool
    f_lower: dict = field(default_factory=dict)

    @property
    def invariants(self) -> tuple[int, int, int]:
        return self.winding, self.clifford_intersections, self.self_intersections_on_diameter


def _cyclic_sign_changes(values: np.ndarray, dead_band: float) -> list[int]:
    """Indices i where the sign of ``values`` changes between a sample and
    the next signed one, cyclically. Samples inside the dead band carry
    no sign."""
    signs = np.where(values > dead_band, 1, np.where(values < -dead_band, -1, 0))
    signed = np.nonzero(signs)[0]
    if len(signed) < 2:
        return []
    seq = signs[signed]
    changes = [int(signed[i]) for i in range(len(seq)) if seq[i] != seq[(i + 1) % len(seq)]]
    return changes


def classify(
    g: EllipsoidGeometry,
    s_root: float,
    k: int,
    cfg: dict | None = None,
    shooting_cfg: dict | None = None,
    trajectory: Trajectory | None = None,
) -> GeodesicClassification:
    """Read off the discrete invariants of the closed geodesic through
    (beta_a(s_root), 0).

    The primitive period is the smallest k' <= k with f_{k'} ~ 0, and all
    counts below refer to one traversal of it, t in [-ell_{k'}, ell_{k'}).
    Clifford intersections are sign changes of rho - rho_{a,0} (read as
    phi - pi/4 with a matching dead band). Self-intersections sit at the
    crossings gamma(ell_m) = gamma(-ell_m), 0 < m < k', and are transverse
    iff rho'(ell_m) != 0.
    """
    settings = _shooting_settings(shooting_cfg)
    k = int(k)
    traj = trajectory if trajectory is not None and trajectory.k_target >= k else integrate(g, s_root, k, cfg)
    f_vals = {m: float(traj.raw(traj.ell(m))[2]) for m in range(1, k + 1)}
    f_value = f_vals[k]
    is_closed = abs(f_value) <= settings["closed_tol"]
    f_lower = {m: f_vals[m] for m in range(1, k)}
    is_primitive = all(abs(v) > settings["primitive_tol"] for v in f_lower.values())
    winding = next((m for m in range(1, k + 1) if abs(f_vals[m]) <= settings["primitive_tol"]), k)

    ell = traj.ell(winding)
    n = int(settings["samples_per_turn"]) * winding * 2
    ts = np.linspace(-ell, ell, n + 1)[:-1]
    y = traj.raw(ts)
    phi_band = settings["dead_band"] / float(rho_prime(g.a, QUARTER_PI))
    changes = _cyclic_sign_changes(y[0] - QUARTER_PI, phi_band)
    clifford = len(changes)

    degenerate = not is_closed
    for i in changes:
        # both samples around a transverse crossing move off the circle
        speed = max(abs(y[2][i]), abs(y[2][(i + 1) % n]))
        if speed < math.sqrt(settings["dead_band"]):
            degenerate = True
    if clifford % 2:
        degenerate = True

    tangential = [m for m in range(1, winding) if abs(f_vals[m]) <= settings["primitive_tol"]]
    if tangential:
        degenerate = True
    self_intersections = sum(1 for m in range(1, winding) if abs(f_vals[m]) > settings["primitive_tol"])
    star_shaped = winding == 1 and bool(np.all(y[3] > 0))

    if degenerate:
        logger.warning("Degenerate classification at a=%s s=%.15g k=%d (clifford=%d, f_k=%.3e)", g.a, s_root, k, clifford, f_value)
    return GeodesicClassification(
        a=g.a,
        s=float(s_root),
        k=k,
        f_value=f_value,
        is_closed=is_closed,
        is_simple=is_closed and winding == 1,
        is_primitive=is_primitive,
        winding=winding,
        clifford_intersections=clifford,
        self_intersections_on_diameter=self_intersections,
        star_shaped=star_shaped,
        degenerate=degenerate,
        f_lower=f_lower,
    )


@dataclass(frozen=True)
class MixedPartialCheck:
    j: int
    k: int
    a_jk: float
    h_a: float
    numeric: float
    target: float

    @property
    def relative_error(self) -> float:
        return abs(self.numeric - self.target) / abs(self.target)


def mixed_partial(
    j: int, k: int, h_a: float | None = None, cfg: dict | None = None, quad_tol: float = 1e-12, h_s: float | None = None
) -> MixedPartialCheck:
    """Centered difference in a of d f_k / ds (a, 0) across a = a^j_k,
    against beta'(0) (-1)^{j+1} (4k^2 - j^2)^{3/2} pi j / (4k^3).

    The inner s-difference uses ``shooting.mixed_h_s``, not ``h_s``.
    """
    check_label(j, k)
    defaults = get_defaults()["shooting"]
    if h_a is None:
        h_a = defaults["h_a"]
    if h_s is None:
        h_s = defaults["mixed_h_s"]
    a_jk = instant_value(j, k)
    if not 0 < h_a < a_jk:
        raise ValueError(f"Step h_a={h_a} must lie in (0, a_jk={a_jk})")
    upper = dfds_at_zero(build_geometry(a_jk + h_a, quad_tol), k, h_s, cfg).finite_difference
    lower = dfds_at_zero(build_geometry(a_jk - h_a, quad_tol), k, h_s, cfg).finite_difference
    target = transversality_target(j, k, beta_prime(build_geometry(a_jk, quad_tol), 0.0))
    return MixedPartialCheck(j=j, k=k, a_jk=a_jk, h_a=float(h_a), numeric=(upper - lower) / (2 * h_a), target=float(target))
