"""Acceptance suite run by ``mte selftest``.

Every check returns a ``CheckResult`` and never raises; numerical
failures inside a check are reported as a failed check with the error
message. ``quick=True`` shrinks the sampled grids for a fast smoke run.
"""

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from MTE.bifurcation.branch import Branch, continue_branch, iota_parity, properness_violations
from MTE.bifurcation.instants import instant_value, instants
from MTE.bifurcation.shooting import classify, closed_form_dfds, dfds_at_zero, find_root, mixed_partial, scan_sign_changes
from MTE.errors import NumericalError
from MTE.lift.torus import embedding_check, lift, mesh_area, torus_area
from MTE.reduction.geodesic_flow import integrate
from MTE.reduction.metric_profile import build_geometry, rho_of_phi, varphi, varphi_derivs

logger = logging.getLogger(__name__)


class CheckFailure(Exception):
    """An acceptance check found a value outside its tolerance."""


def _require(condition, message: str) -> None:
    if not condition:
        raise CheckFailure(message)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_instants(**_) -> str:
    values = instants(6)
    a11 = next(b.a_jk for b in values if b.label == (1, 1))
    _require(abs(a11 - 1 / math.sqrt(3)) <= 1e-14, f"a_11={a11!r}")
    _require(all(abs(b.a_jk - 1) > 1e-12 for b in values), "an instant equals 1")
    a = np.array([b.a_jk for b in values])
    _require(np.all(np.diff(a) > 0), "instants are not distinct")
    return f"{len(values)} instants for k <= 6"


def check_profiles(**_) -> str:
    g = build_geometry(1.0)
    phi = np.linspace(0, np.pi / 2, 101)
    _require(np.max(np.abs(rho_of_phi(g, phi) - 2 * np.pi * np.sin(phi))) <= 1e-10, "rho(phi) at a=1")
    _require(abs(g.L_a - 2 * np.pi) <= 1e-10, f"L_a={g.L_a!r} at a=1")
    for rho in np.linspace(0, 2 * np.pi, 21)[:-1]:
        _require(abs(varphi(g, rho) - rho * math.sqrt(max(0.0, 1 - rho**2 / (4 * np.pi**2)))) <= 1e-10, f"varphi at rho={rho}")
    for a in (0.3, 0.5, 1.0, 2.0, 5.0):
        ga = build_geometry(a)
        _require(abs(varphi(ga, ga.rho_clifford) - np.pi * a) <= 1e-9, f"varphi at a={a}")
        second = varphi_derivs(ga, ga.rho_clifford)[1]
        _require(abs(second + 4 * a / (np.pi * (a * a + 1))) <= 1e-9, f"varphi'' at a={a}")
    return "a=1 closed forms and Clifford values at 5 eccentricities"


def check_conservation(rng: np.random.Generator, quick: bool = False, **_) -> str:
    n = 10 if quick else 50
    worst = 0.0
    for _ in range(n):
        a = rng.uniform(0.2, 5.0)
        s = rng.uniform(-0.8, 0.8)
        k = int(rng.integers(1, 5))
        traj = integrate(build_geometry(a), s, k)
        worst = max(worst, traj.clairaut_drift, traj.energy_drift)
    _require(worst <= 1e-9, f"drift {worst:.3e}")
    for a in (0.5, 1.0, 2.0):
        traj = integrate(build_geometry(a), 0.0, 4)
        for m in range(1, 5):
            _require(abs(traj.ell(m) - m * np.pi) <= 1e-10, f"ell_{m}(a={a}, 0)")
    return f"{n} random runs, worst drift {worst:.2e}"


def check_jacobi(quick: bool = False, **_) -> str:
    n = 40 if quick else 200
    grid = np.linspace(0.2, 3.0, n)
    worst = 0.0
    zeros = []
    for k in range(1, 5):
        fd = np.array([dfds_at_zero(build_geometry(a), k).finite_difference for a in grid])
        closed = np.array([closed_form_dfds(build_geometry(a), k) for a in grid])
        scale = np.max(np.abs(closed))
        away = np.abs(closed) > 1e-2 * scale
        worst = max(worst, float(np.max(np.abs(fd[away] - closed[away]) / np.abs(closed[away]))))
        for i in np.nonzero(np.sign(fd[:-1]) * np.sign(fd[1:]) < 0)[0]:
            root = brentq(lambda a: dfds_at_zero(build_geometry(a), k).finite_difference, grid[i], grid[i + 1], xtol=1e-10)
            nearest = min((instant_value(j, k) for j in range(1, 2 * k)), key=lambda v: abs(v - root))
            zeros.append(abs(root - nearest))
    _require(worst <= 1e-5, f"relative error {worst:.3e}")
    _require(zeros and max(zeros) <= 1e-6, f"zero offset {max(zeros, default=float('nan')):.3e}")
    return f"worst relative error {worst:.2e}, {len(zeros)} zeros within {max(zeros):.1e}"


def check_transversality(**_) -> str:
    worst = 0.0
    for j, k in ((1, 1), (1, 2), (3, 2), (1, 3), (2, 3)):
        check = mixed_partial(j, k)
        worst = max(worst, check.relative_error)
    _require(worst <= 1e-3, f"relative error {worst:.3e}")
    return f"worst relative error {worst:.2e}"


def _b11_root(quick: bool):
    g = build_geometry(0.5)
    brackets = scan_sign_changes(g, 1, np.linspace(0.0, 0.95, 201 if quick else 2001)[1:])
    _require(brackets, "no sign change of f_1 at a=0.5")
    return g, find_root(g, 1, brackets[0])


def check_nontrivial_root(quick: bool = False, **_) -> str:
    g, root = _b11_root(quick)
    _require(abs(root.f_value) <= 1e-10, f"|f_1|={abs(root.f_value):.3e}")
    c = classify(g, root.s, 1)
    _require(c.is_simple and c.invariants == (1, 2, 0), f"classification {c.invariants}")
    _require(embedding_check(integrate(g, root.s, 1)).embedded, "root is not embedded")
    return f"s*={root.s:.12f}"


def _branch(j: int, k: int, direction: int, **cont) -> Branch:
    return continue_branch(next(b for b in instants(k) if b.label == (j, k)), direction, cont)


def check_branch_11(branches: list, quick: bool = False, **_) -> str:
    summary = []
    for direction in (1, -1):
        b = _branch(1, 1, direction, a_min=0.25, ds_max=0.01 if quick else 0.003)
        branches.append(b)
        _require(b.termination == "reached_a_min", f"direction {direction:+d}: {b.termination} {b.message}")
        _require(len(b.points) >= (30 if quick else 100), f"{len(b.points)} points")
        _require(max(abs(p.f_residual) for p in b.points) <= 1e-8, f"direction {direction:+d}: residual above 1e-8")
        _require({p.invariants for p in b.points} == {(1, 2, 0)}, f"direction {direction:+d}: invariants changed")
        _require(max(p.a for p in b.points) <= 1.0, f"direction {direction:+d}: point with a > 1")
        summary.append(f"{direction:+d}: {len(b.points)} points")
    return ", ".join(summary)


def check_branch_12(branches: list, quick: bool = False, **_) -> str:
    b = _branch(1, 2, 1, max_points=10 if quick else 40)
    branches.append(b)
    _require(b.points, f"no points: {b.message}")
    _require({p.invariants for p in b.points} == {(2, 2, 1)}, "invariants")
    p = b.points[-1]
    report = embedding_check(integrate(build_geometry(p.a), p.s, 2))
    _require(len(report.crossing_points) == 1 and report.on_diameter, f"crossings {report.crossing_points}")
    return f"{len(b.points)} points, crossing offset {report.max_offset:.1e}"


def check_involution(branches: list, quick: bool = False, **_) -> str:
    b11 = next((b for b in branches if b.label == (1, 1)), None) or _branch(1, 1, 1, max_points=20)
    b23 = _branch(2, 3, 1, max_points=5 if quick else 15)
    branches.append(b23)
    odd = iota_parity(b11, 3)
    even = iota_parity(b23, 3)
    _require(odd["samples"] and even["samples"], "empty branches")
    _require(odd["preserved"] is False and even["preserved"] is True, f"parity {odd['preserved']}, {even['preserved']}")
    worst = max(odd["involution_error"], even["involution_error"])
    _require(worst <= 1e-8, f"involution error {worst:.3e}")
    return f"involution error {worst:.1e}"


def check_lift(quick: bool = False, **_) -> str:
    for a in (0.5, 1.0, 2.0):
        g = build_geometry(a)
        traj = integrate(g, 0.0, 1)
        mesh = lift(g, traj, n_t=64, n_psi=16)
        z2 = (mesh.vertices[..., 0] ** 2 + mesh.vertices[..., 1] ** 2) / a**2
        _require(np.max(np.abs(z2 - 0.5)) <= 1e-10, f"|z|^2/a^2 at a={a}")
        _require(abs(torus_area(g, traj) - 2 * np.pi**2 * a) <= 1e-9 * 2 * np.pi**2 * a, f"area at a={a}")
    g, root = _b11_root(quick)
    traj = integrate(g, root.s, 1)
    area = torus_area(g, traj)
    discrete = mesh_area(lift(g, traj))
    _require(abs(discrete - area) <= 5e-3 * area, f"mesh area {discrete} vs {area}")
    return f"B_(1,1) area {area:.6f}, mesh {discrete:.6f}"


def check_properness(branches: list, **_) -> str:
    bad = properness_violations(branches)
    _require(not bad, f"branches reach |s| > 0.999 with a in [0.1, 10] at {[(a, s) for _, a, s in bad]}")
    return f"{sum(len(b.points) for b in branches)} branch points scanned"


CHECKS = [
    ("instants", check_instants),
    ("profiles", check_profiles),
    ("conservation", check_conservation),
    ("jacobi", check_jacobi),
    ("transversality", check_transversality),
    ("nontrivial_root", check_nontrivial_root),
    ("branch_11", check_branch_11),
    ("branch_12", check_branch_12),
    ("involution", check_involution),
    ("lift", check_lift),
    ("properness", check_properness),
]


def run_selftest(seed: int = 0, quick: bool = False, only: list[str] | None = None) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    branches: list[Branch] = []
    results = []
    for name, check in CHECKS:
        if only and name not in only:
            continue
        start = time.perf_counter()
        try:
            detail = check(rng=rng, quick=quick, branches=branches)
            passed = True
        except (CheckFailure, NumericalError, ValueError) as exc:
            detail = str(exc) or type(exc).__name__
            passed = False
        elapsed = time.perf_counter() - start
        logger.info("selftest %s: %s (%.1f s) %s", name, "ok" if passed else "FAILED", elapsed, detail)
        results.append(CheckResult(name=name, passed=passed, detail=detail, seconds=elapsed))
    return results
