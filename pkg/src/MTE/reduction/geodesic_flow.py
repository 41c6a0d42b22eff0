"""Geodesic flow of Omega_a.

Geodesics gamma(t) = (rho(t), theta(t)) solve

    rho'' = varphi(rho) varphi'(rho) theta'^2,
    theta'' = -2 varphi'(rho)/varphi(rho) rho' theta',

with first integrals c = theta' varphi^2 (Clairaut) and
E = rho'^2 + varphi^2 theta'^2 (energy).

The integrator works in the latitude chart (phi, theta, rho', theta'),
where phi' = rho'/rho_prime(phi) and varphi, varphi' are closed-form in
phi, so no inversion of the arclength map happens inside the right-hand
side. States handed out are always in (rho, theta, rho', theta').
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, OdeSolution
from scipy.optimize import brentq

from MTE.config import get_defaults
from MTE.errors import ConservationDriftError, IntegrationError, SingularBoundaryError
from MTE.reduction.metric_profile import (
    HALF_PI,
    EllipsoidGeometry,
    phi_of_s,
    rho_of_phi,
    varphi,
    varphi_derivs,
    varphi_of_phi,
)

logger = logging.getLogger(__name__)

# Latitude margin kept from the center and the singular boundary
PHI_GUARD = 1e-9


@dataclass(frozen=True)
class GeodesicState:
    t: float
    rho: float
    theta: float
    rho_dot: float
    theta_dot: float


@dataclass(eq=False)
class Trajectory:
    """Dense-output solution of the geodesic ODE from (beta_a(s), 0) with
    initial velocity (0, 1).

    ``crossing_events`` lists ``(m, t_m)`` with theta(t_m) = m pi (times
    negative for a backward integration). Evaluation at ``-t`` outside
    the integrated range uses the reflection about the diameter D(0):
    (rho, theta, rho', theta')(-t) = (rho, -theta, -rho', theta')(t).
    """

    geometry: EllipsoidGeometry
    s: float
    k_target: int
    direction: int
    solution: OdeSolution
    t_span: tuple[float, float]
    crossing_events: list[tuple[int, float]] = field(default_factory=list)
    clairaut0: float = 0.0
    energy0: float = 0.0
    clairaut_drift: float = 0.0
    energy_drift: float = 0.0
    n_steps: int = 0

    @property
    def a(self) -> float:
        return self.geometry.a

    def ell(self, m: int) -> float:
        """|t_m| for the m-th recorded crossing."""
        for index, t_m in self.crossing_events:
            if index == m:
                return abs(t_m)
        raise KeyError(f"Crossing m={m} was not recorded (k_target={self.k_target})")

    def raw(self, t) -> np.ndarray:
        """Latitude-chart state (phi, theta, rho', theta') at time(s) ``t``,
        shape (4,) or (4, n)."""
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        lo, hi = min(self.t_span), max(self.t_span)
        slack = 1e-12 * max(1.0, hi - lo)
        inside = (flat >= lo - slack) & (flat <= hi + slack)
        mirrored = ~inside & (-flat >= lo - slack) & (-flat <= hi + slack)
        if not np.all(inside | mirrored):
            raise ValueError(f"Time outside the integrated range [{-hi}, {hi}] of the trajectory")
        out = np.empty((4, flat.size))
        if np.any(inside):
            out[:, inside] = self.solution(np.clip(flat[inside], lo, hi)).reshape(4, -1)
        if np.any(mirrored):
            y = self.solution(np.clip(-flat[mirrored], lo, hi)).reshape(4, -1)
            out[:, mirrored] = y * np.array([1.0, -1.0, -1.0, 1.0])[:, None]
        if t_arr.ndim == 0:
            return out[:, 0]
        return out

    def states(self, t) -> dict[str, np.ndarray]:
        """Arrays ``t, rho, theta, rho_dot, theta_dot, phi`` at the given
        times."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        y = self.raw(t_arr)
        phi = np.clip(y[0], 0.0, HALF_PI)
        return {
            "t": t_arr,
            "rho": rho_of_phi(self.geometry, phi),
            "theta": y[1],
            "rho_dot": y[2],
            "theta_dot": y[3],
            "phi": phi,
        }

    def state(self, t: float) -> GeodesicState:
        st = self.states([t])
        return GeodesicState(
            t=float(t),
            rho=float(st["rho"][0]),
            theta=float(st["theta"][0]),
            rho_dot=float(st["rho_dot"][0]),
            theta_dot=float(st["theta_dot"][0]),
        )


def _ode_settings(cfg: dict | None) -> dict:
    settings = dict(get_defaults()["ode"])
    settings.update(cfg or {})
    return settings


def geodesic_rhs(g: EllipsoidGeometry, state: GeodesicState) -> tuple[float, float, float, float]:
    """Derivative (rho', theta', rho'', theta'') of ``state``."""
    v = varphi(g, state.rho)
    dv, _ = varphi_derivs(g, state.rho)
    rho_ddot = v * dv * state.theta_dot**2
    theta_ddot = -2 * (dv / v) * state.rho_dot * state.theta_dot if v > 0 else 0.0
    return state.rho_dot, state.theta_dot, rho_ddot, theta_ddot


def clairaut(g: EllipsoidGeometry, state: GeodesicState) -> float:
    """Clairaut constant theta' varphi(rho)^2."""
    return state.theta_dot * varphi(g, state.rho) ** 2


def energy(g: EllipsoidGeometry, state: GeodesicState) -> float:
    """Kinetic energy rho'^2 + varphi(rho)^2 theta'^2."""
    return state.rho_dot**2 + varphi(g, state.rho) ** 2 * state.theta_dot**2


def _latitude_rhs(a: float):
    two_pi = 2 * math.pi
    coupling = 2 * (math.pi * a) ** 2

    def rhs(t, y):
        phi, _, rho_dot, theta_dot = y
        c, s = math.cos(phi), math.sin(phi)
        rp = two_pi * c * math.sqrt(a * a * c * c + s * s)
        s2, c2 = 2 * s * c, c * c - s * s
        return np.array(
            [
                rho_dot / rp,
                theta_dot,
                coupling * s2 * c2 / rp * theta_dot * theta_dot,
                -4 * c2 / (s2 * rp) * rho_dot * theta_dot,
            ]
        )

    return rhs


def _first_integrals(a: float, y) -> tuple[float, float]:
    v = varphi_of_phi(a, y[0])
    return float(y[3] * v * v), float(y[2] ** 2 + v * v * y[3] ** 2)


def _relative_drift(value: float, reference: float) -> float:
    return abs(value - reference) / abs(reference) if reference != 0 else abs(value)


def _locate_crossing(dense, t_old: float, t_new: float, target: float, tol: float) -> float:
    """Time in [t_old, t_new] where theta = target: bracketed root on the
    step's dense output followed by one Newton polish."""
    lo, hi = min(t_old, t_new), max(t_old, t_new)
    t_m = brentq(lambda t: dense(t)[1] - target, lo, hi, xtol=tol * 1e-3, rtol=4 * np.finfo(float).eps)
    y = dense(t_m)
    if y[3] != 0:
        polished = t_m - (y[1] - target) / y[3]
        if lo <= polished <= hi:
            t_m = polished
    return float(t_m)


def integrate(g: EllipsoidGeometry, s: float, k_target: int, cfg: dict | None = None, direction: int = 1) -> Trajectory:
    """Integrate gamma_{a,s} until its ``k_target``-th crossing of the
    diameter D(0), i.e. theta = k_target pi (or -k_target pi backwards).

    Raises
    ------
    ValueError
        If ``s`` is too close to +-1 or ``k_target`` < 1.
    IntegrationError
        If the step budget is exhausted or the solver fails.
    ConservationDriftError
        If the Clairaut constant or the energy drifts beyond ``drift_tol``.
    SingularBoundaryError
        If the trajectory approaches the center or the boundary.
    """
    settings = _ode_settings(cfg)
    if not abs(s) < 1 - settings["s_guard"]:
        raise ValueError(f"Shooting parameter s={s} too close to +-1 (guard {settings['s_guard']})")
    if int(k_target) < 1:
        raise ValueError(f"k_target must be a positive integer, got {k_target}")
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    k_target = int(k_target)
    a = g.a
    y0 = np.array([phi_of_s(s), 0.0, 0.0, 1.0])
    c0, e0 = _first_integrals(a, y0)
    solver = DOP853(_latitude_rhs(a), 0.0, y0, direction * 1e6, rtol=settings["rtol"], atol=settings["atol"])

    ts = [0.0]
    interpolants = []
    events: list[tuple[int, float]] = []
    m_next = 1
    max_c_drift = max_e_drift = 0.0
    n_steps = 0
    while m_next <= k_target:
        t_old = solver.t
        message = solver.step()
        n_steps += 1
        if solver.status == "failed":
            raise IntegrationError(f"Geodesic integration failed at t={solver.t} (a={a}, s={s}): {message}")
        if n_steps > settings["max_steps"]:
            raise IntegrationError(f"Exceeded {settings['max_steps']} steps before crossing m={m_next} (a={a}, s={s})")
        dense = solver.dense_output()
        ts.append(solver.t)
        interpolants.append(dense)
        y = solver.y
        if not PHI_GUARD < y[0] < HALF_PI - PHI_GUARD:
            logger.warning("Interior start a=%s s=%s reached phi=%.3e at t=%.6g", a, s, y[0], solver.t)
            raise SingularBoundaryError(f"Trajectory a={a}, s={s} left the interior of Omega_a at t={solver.t}")
        c, e = _first_integrals(a, y)
        max_c_drift = max(max_c_drift, _relative_drift(c, c0))
        max_e_drift = max(max_e_drift, _relative_drift(e, e0))
        if max(max_c_drift, max_e_drift) > settings["drift_tol"]:
            raise ConservationDriftError(
                f"First integrals drifted (clairaut {max_c_drift:.3e}, energy {max_e_drift:.3e}) "
                f"beyond {settings['drift_tol']:.1e} at t={solver.t} (a={a}, s={s})"
            )
        # theta is monotone, so crossings come in order of m
        while m_next <= k_target and direction * y[1] >= m_next * np.pi:
            target = direction * m_next * np.pi
            events.append((m_next, _locate_crossing(dense, t_old, solver.t, target, settings["event_tol"])))
            m_next += 1
        if solver.status == "finished":
            raise IntegrationError(f"Reached the time bound before crossing m={m_next} (a={a}, s={s})")

    solution = OdeSolution(ts, interpolants)
    logger.debug("Integrated a=%s s=%s to k=%d in %d steps", a, s, k_target, n_steps)
    return Trajectory(
        geometry=g,
        s=float(s),
        k_target=k_target,
        direction=direction,
        solution=solution,
        t_span=(ts[0], ts[-1]),
        crossing_events=events,
        clairaut0=c0,
        energy0=e0,
        clairaut_drift=max_c_drift,
        energy_drift=max_e_drift,
        n_steps=n_steps,
    )


def ell_k(g: EllipsoidGeometry, s: float, k: int, cfg: dict | None = None) -> float:
    """Crossing time ell_k(a, s) > 0 with theta(ell_k) = k pi."""
    return integrate(g, s, k, cfg).ell(k)


def sample_rows(traj: Trajectory, n: int = 1001, symmetric: bool = False) -> np.ndarray:
    """Rows ``(t, rho, theta, rho_dot, theta_dot, clairaut_drift,
    energy_drift)`` sampled uniformly up to the last recorded crossing,
    over [-ell, ell] if ``symmetric``."""
    end = traj.ell(traj.k_target) * traj.direction
    ts = np.linspace(-end if symmetric else 0.0, end, n)
    st = traj.states(ts)
    v = varphi_of_phi(traj.a, st["phi"])
    c = st["theta_dot"] * v * v
    e = st["rho_dot"] ** 2 + v * v * st["theta_dot"] ** 2
    c_drift = np.abs(c - traj.clairaut0) / abs(traj.clairaut0)
    e_drift = np.abs(e - traj.energy0) / abs(traj.energy0)
    return np.column_stack([ts, st["rho"], st["theta"], st["rho_dot"], st["theta_dot"], c_drift, e_drift])
