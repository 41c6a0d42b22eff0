"""Continuation of the bifurcation branches B_(j,k) in the (a, s) strip.

A branch issues from the trivial solution (a^j_k, 0) and is traced by
pseudo-arclength continuation of f_k(a, s) = 0 in the full (a, s) plane,
so folds in a are traversable. Derivatives of f_k are forward
differences; every accepted point is reclassified and the run stops as
soon as its invariants (winding, Clifford intersections,
self-intersections) move away from (k, 2j, k - 1).
"""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np
from scipy.spatial import cKDTree

from MTE.bifurcation.instants import BifurcationInstant
from MTE.bifurcation.shooting import ShootingResult, classify, shoot
from MTE.config import get_defaults
from MTE.errors import ContinuationError, NumericalError
from MTE.reduction.geodesic_flow import Trajectory, integrate
from MTE.reduction.metric_profile import build_geometry, phi_of_s, s_of_phi, varphi_of_phi

logger = logging.getLogger(__name__)

TERMINATIONS = ("reached_a_min", "reached_a_max", "step_limit", "failure")
POINT_FIELDS = ["a", "s", "ell_k", "f_residual", "winding", "clifford_intersections", "self_intersections"]


@dataclass(frozen=True)
class BranchPoint:
    a: float
    s: float
    ell_k: float
    f_residual: float
    winding: int
    clifford_intersections: int
    self_intersections: int

    @property
    def invariants(self) -> tuple[int, int, int]:
        return self.winding, self.clifford_intersections, self.self_intersections

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in POINT_FIELDS}


@dataclass
class Branch:
    """Half-branch of B_(j,k) leaving (a^j_k, 0) towards ``direction``
    (+1 for s > 0, -1 for s < 0)."""

    instant: BifurcationInstant
    direction: int
    points: list[BranchPoint] = field(default_factory=list)
    termination: str = "failure"
    message: str = ""
    strip_exit: tuple[float, float] | None = None

    @property
    def label(self) -> tuple[int, int]:
        return self.instant.label

    @property
    def start(self) -> tuple[float, float]:
        return self.instant.a_jk, 0.0

    @property
    def expected_invariants(self) -> tuple[int, int, int]:
        j, k = self.label
        return k, 2 * j, k - 1

    @property
    def limit_direction(self) -> str:
        """Which end of the a-axis the branch was heading for when it
        stopped."""
        if self.termination == "reached_a_min":
            return "a_to_zero"
        if self.termination == "reached_a_max":
            return "a_to_infinity"
        return "undecided"

    def coordinates(self) -> np.ndarray:
        """Accepted points as an (n, 2) array of (a, s)."""
        return np.array([[p.a, p.s] for p in self.points]).reshape(-1, 2)

    def rows(self) -> np.ndarray:
        return np.array([[getattr(p, name) for name in POINT_FIELDS] for p in self.points], dtype=float).reshape(-1, len(POINT_FIELDS))

    def diagram_rows(self) -> np.ndarray:
        j, k = self.label
        xy = self.coordinates()
        return np.column_stack([xy, np.full(len(xy), j), np.full(len(xy), k)])


LABEL_FIELDS = ["direction"] + POINT_FIELDS


def label_payload(halves: list[Branch]) -> dict:
    """Half-branches of one label as a single header and point array,
    each point tagged with the direction it was traced in."""
    if not halves or len({b.label for b in halves}) != 1:
        raise ValueError(f"Expected half-branches of one label, got {[b.label for b in halves]}")
    j, k = halves[0].label
    return {
        "header": {
            "j": j,
            "k": k,
            "a_jk": halves[0].instant.a_jk,
            "halves": [
                {
                    "direction": b.direction,
                    "termination": b.termination,
                    "message": b.message,
                    "limit_direction": b.limit_direction,
                    "strip_exit": b.strip_exit,
                }
                for b in halves
            ],
        },
        "points": [{"direction": b.direction, **p.as_dict()} for b in halves for p in b.points],
    }


def label_rows(halves: list[Branch]) -> np.ndarray:
    parts = [np.column_stack([np.full(len(b.points), b.direction), b.rows()]) for b in halves]
    return np.vstack(parts) if parts else np.empty((0, len(LABEL_FIELDS)))


def _section(name: str, values: dict | None) -> dict:
    settings = dict(get_defaults()[name])
    settings.update(values or {})
    return settings


class _ShootingMap:
    """(a, s) -> f_k(a, s) with forward-difference gradient."""

    def __init__(self, k: int, ode_cfg: dict | None, quad_tol: float, h_a: float, h_s: float):
        self.k = k
        self.ode_cfg = ode_cfg
        self.quad_tol = quad_tol
        self.h_a = h_a
        self.h_s = h_s

    def shoot(self, a: float, s: float) -> tuple[ShootingResult, Trajectory]:
        return shoot(build_geometry(float(a), self.quad_tol), float(s), self.k, self.ode_cfg)

    def __call__(self, a: float, s: float) -> float:
        return self.shoot(a, s)[0].f_value

    def gradient(self, a: float, s: float, f0: float) -> np.ndarray:
        f_a = (self(a + self.h_a, s) - f0) / self.h_a
        f_s = (self(a, s + self.h_s) - f0) / self.h_s
        return np.array([f_a, f_s])


def _tangent(gradient: np.ndarray, previous: np.ndarray) -> np.ndarray:
    tangent = np.array([-gradient[1], gradient[0]])
    norm = np.linalg.norm(tangent)
    if norm == 0:
        raise ContinuationError("Vanishing gradient of f_k, the tangent is undefined")
    tangent /= norm
    return tangent if tangent @ previous >= 0 else -tangent


def _correct_in_a(fmap: _ShootingMap, a0: float, s: float, settings: dict) -> tuple[float, int]:
    """Newton in a at fixed s, landing on the nontrivial sheet."""
    a = a0
    for iteration in range(1, settings["newton_max_iter"] + 1):
        f0 = fmap(a, s)
        if abs(f0) <= settings["newton_tol"]:
            return a, iteration - 1
        f_a = (fmap(a + fmap.h_a, s) - f0) / fmap.h_a
        if f_a == 0:
            raise ContinuationError(f"d f_{fmap.k}/da vanished at (a={a}, s={s})")
        a -= f0 / f_a
        if a <= 0:
            raise ContinuationError(f"Newton in a left a > 0 from a0={a0} at s={s}")
    raise ContinuationError(f"Newton in a did not converge at s={s} after {settings['newton_max_iter']} iterations")


def _correct(fmap: _ShootingMap, x_prev: np.ndarray, tangent: np.ndarray, ds: float, settings: dict) -> tuple[np.ndarray, int]:
    """Newton on {f_k(x) = 0, tangent . (x - x_prev) = ds} from the
    tangent predictor."""
    x = x_prev + ds * tangent
    for iteration in range(1, settings["newton_max_iter"] + 1):
        if x[0] <= 0 or not abs(x[1]) < 1:
            raise ContinuationError(f"Corrector left the strip at (a={x[0]}, s={x[1]})")
        f0 = fmap(*x)
        constraint = tangent @ (x - x_prev) - ds
        if abs(f0) <= settings["newton_tol"] and abs(constraint) <= 1e-12:
            return x, iteration - 1
        jac = np.vstack([fmap.gradient(x[0], x[1], f0), tangent])
        try:
            dx = np.linalg.solve(jac, [f0, constraint])
        except np.linalg.LinAlgError as exc:
            raise ContinuationError(f"Singular corrector system at (a={x[0]}, s={x[1]})") from exc
        x = x - dx
    raise ContinuationError(f"Corrector did not converge from (a={x_prev[0]}, s={x_prev[1]}) with ds={ds}")


def _accept(fmap: _ShootingMap, x: np.ndarray, ode_cfg: dict | None, shooting_cfg: dict | None) -> BranchPoint:
    res, traj = fmap.shoot(*x)
    c = classify(traj.geometry, float(x[1]), fmap.k, ode_cfg, shooting_cfg, trajectory=traj)
    return BranchPoint(
        a=float(x[0]),
        s=float(x[1]),
        ell_k=res.ell_k,
        f_residual=res.f_value,
        winding=c.winding,
        clifford_intersections=c.clifford_intersections,
        self_intersections=c.self_intersections_on_diameter,
    )


def continue_branch(
    instant: BifurcationInstant,
    direction: int,
    cont_cfg: dict | None = None,
    ode_cfg: dict | None = None,
    shooting_cfg: dict | None = None,
    quad_tol: float = 1e-12,
) -> Branch:
    """Trace the half-branch of B_(j,k) leaving (a^j_k, 0) with sign(s) =
    ``direction``.

    The first point steps purely in s by ``direction * ds0`` and corrects
    in a at fixed s. Subsequent points use the tangent predictor and the
    arclength-constrained Newton corrector; a failed correction halves the
    step (up to ``max_halvings`` times, never below ``ds_min``), a quick
    one grows it by 1.5 up to ``ds_max``.

    Failures are recorded in ``termination``/``message``, not raised.
    """
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    settings = _section("continuation", cont_cfg)
    fmap = _ShootingMap(instant.k, ode_cfg, quad_tol, settings["jac_h_a"], settings["jac_h_s"])
    branch = Branch(instant=instant, direction=direction)
    j, k = instant.label

    ds = settings["ds0"]
    for _ in range(settings["max_halvings"] + 1):
        s1 = direction * ds
        try:
            a1, _ = _correct_in_a(fmap, instant.a_jk, s1, settings)
            break
        except (NumericalError, ValueError) as exc:
            logger.debug("First step of B_(%d,%d) with ds=%.3e failed: %s", j, k, ds, exc)
            ds /= 2
    else:
        branch.message = f"Could not leave the trivial branch at a_jk={instant.a_jk}"
        logger.info("B_(%d,%d) direction %+d: %s", j, k, direction, branch.message)
        return branch

    x = np.array([a1, s1])
    previous = x - np.array(branch.start)
    previous /= np.linalg.norm(previous)
    ds = settings["ds0"]
    iterations = 0

    while True:
        if not settings["a_min"] <= x[0] <= settings["a_max"]:
            branch.termination = "reached_a_min" if x[0] < settings["a_min"] else "reached_a_max"
            break
        if abs(x[1]) > settings["s_max"]:
            branch.termination = "failure"
            branch.message = f"Branch left the shooting strip |s| <= {settings['s_max']} at a={x[0]}"
            branch.strip_exit = (float(x[0]), float(x[1]))
            break
        try:
            point = _accept(fmap, x, ode_cfg, shooting_cfg)
        except NumericalError as exc:
            branch.message = f"Classification failed at (a={x[0]}, s={x[1]}): {exc}"
            break
        if point.invariants != branch.expected_invariants:
            branch.message = f"Invariants changed to {point.invariants} at (a={x[0]}, s={x[1]}), expected {branch.expected_invariants}"
            logger.warning("B_(%d,%d) direction %+d: %s", j, k, direction, branch.message)
            break
        branch.points.append(point)
        if len(branch.points) >= settings["max_points"]:
            branch.termination = "step_limit"
            break
        if iterations <= 3:
            ds = min(ds * 1.5, settings["ds_max"])

        try:
            tangent = _tangent(fmap.gradient(x[0], x[1], point.f_residual), previous)
        except NumericalError as exc:
            branch.message = f"Tangent failed at (a={x[0]}, s={x[1]}): {exc}"
            break
        for _ in range(settings["max_halvings"] + 1):
            try:
                x_new, iterations = _correct(fmap, x, tangent, ds, settings)
                if np.linalg.norm(x_new - x) > 2 * ds:
                    raise ContinuationError(f"Corrector jumped {np.linalg.norm(x_new - x):.3e} with ds={ds:.3e}")
                break
            except (NumericalError, ValueError) as exc:
                logger.debug("B_(%d,%d) halving ds=%.3e at (a=%.12g, s=%.12g): %s", j, k, ds, x[0], x[1], exc)
                ds /= 2
                if ds < settings["ds_min"]:
                    break
        else:
            x_new = None
        if ds < settings["ds_min"] or x_new is None:
            branch.message = f"Corrector failed at (a={x[0]}, s={x[1]}) after step halving"
            break
        previous = tangent
        x = x_new

    logger.info("B_(%d,%d) direction %+d: %d points, %s %s", j, k, direction, len(branch.points), branch.termination, branch.message)
    return branch


@dataclass(frozen=True)
class IotaResult:
    """The root s' related to s by the involution iota_k, with the checks
    that make it a root of f_k with the same closed geodesic length."""

    a: float
    k: int
    s: float
    s_reflected: float
    f_reflected: float
    ell_k: float
    ell_k_reflected: float
    length: float
    length_reflected: float
    is_root: bool
    same_length: bool

    @property
    def preserves_sign(self) -> bool:
        return bool(np.sign(self.s) == np.sign(self.s_reflected))


def iota_k(g, s_root: float, k: int, ode_cfg: dict | None = None, shooting_cfg: dict | None = None, length_tol: float = 1e-8) -> IotaResult:
    """Reflect a closed geodesic through the perpendicular diameter.

    The reflected geodesic starts orthogonally to D(0) at the far crossing
    gamma(ell_k), so s' = beta^{-1}(rho(ell_k)). Since gamma_{a,s} is
    normalised by theta'(0) = 1, the reflected curve is a reparametrisation
    of gamma_{a,s'}; equality is checked on the geodesic length
    2 ell_k varphi(beta(s)).
    """
    settings = _section("shooting", shooting_cfg)
    traj = integrate(g, s_root, k, ode_cfg)
    ell = traj.ell(k)
    phi_far = float(traj.raw(ell)[0])
    s_reflected = float(s_of_phi(phi_far))
    if not -1 < s_reflected < 1:
        raise NumericalError(f"Far crossing at phi={phi_far} is outside the shooting range")
    res, _ = shoot(g, s_reflected, k, ode_cfg)
    length = 2 * ell * float(varphi_of_phi(g.a, phi_of_s(s_root)))
    length_reflected = 2 * res.ell_k * float(varphi_of_phi(g.a, phi_of_s(s_reflected)))
    return IotaResult(
        a=g.a,
        k=int(k),
        s=float(s_root),
        s_reflected=s_reflected,
        f_reflected=res.f_value,
        ell_k=ell,
        ell_k_reflected=res.ell_k,
        length=length,
        length_reflected=length_reflected,
        is_root=abs(res.f_value) <= settings["closed_tol"],
        same_length=abs(length - length_reflected) <= length_tol * length,
    )


def iota_parity(
    branch: Branch, n_samples: int = 3, ode_cfg: dict | None = None, shooting_cfg: dict | None = None, quad_tol: float = 1e-12
) -> dict:
    """Apply iota_k twice to up to ``n_samples`` points spread along the
    branch; report whether the sign of s is preserved and the
    involution error."""
    if not branch.points:
        return {"samples": 0, "preserved": None, "involution_error": None}
    picks = np.unique(np.linspace(0, len(branch.points) - 1, n_samples).round().astype(int))
    preserved = []
    errors = []
    k = branch.label[1]
    for i in picks:
        p = branch.points[i]
        g = build_geometry(p.a, quad_tol)
        once = iota_k(g, p.s, k, ode_cfg, shooting_cfg)
        twice = iota_k(g, once.s_reflected, k, ode_cfg, shooting_cfg)
        preserved.append(once.preserves_sign)
        errors.append(abs(twice.s_reflected - p.s))
    return {"samples": len(picks), "preserved": all(preserved), "involution_error": max(errors)}


def trivial_branch(a_min: float, a_max: float, n: int = 201) -> np.ndarray:
    """Rows (a, 0, 0, 0) of the Clifford family, labelled (j, k) = (0, 0)."""
    if not 0 < a_min < a_max:
        raise ValueError(f"Need 0 < a_min < a_max, got [{a_min}, {a_max}]")
    a = np.geomspace(a_min, a_max, n)
    zeros = np.zeros_like(a)
    return np.column_stack([a, zeros, zeros, zeros])


def min_distance(first: np.ndarray, second: np.ndarray) -> float:
    """Smallest Euclidean distance between two (n, 2) point sets."""
    if len(first) == 0 or len(second) == 0:
        return float("inf")
    distances, _ = cKDTree(first).query(second, k=1)
    return float(np.min(distances))


def properness_violations(branches: list[Branch], s_max: float = 0.999, a_window: tuple[float, float] = (0.1, 10.0)) -> list[tuple]:
    """Places where a branch reaches |s| > s_max while a stays inside
    ``a_window``: accepted points beyond s_max and the point where
    continuation left the shooting strip."""
    lo, hi = a_window
    found = [(b.label, p.a, p.s) for b in branches for p in b.points if abs(p.s) > s_max and lo <= p.a <= hi]
    for b in branches:
        if b.strip_exit is not None and lo <= b.strip_exit[0] <= hi:
            found.append((b.label, *b.strip_exit))
    return found


@dataclass
class Diagram:
    branches: list[Branch]
    trivial: np.ndarray
    distances: dict = field(default_factory=dict)
    resolution: float = 0.0
    failures: list[str] = field(default_factory=list)
    violations: list[tuple] = field(default_factory=list)

    @property
    def disjoint(self) -> bool:
        return all(d > self.resolution for d in self.distances.values())

    def rows(self) -> np.ndarray:
        parts = [self.trivial] + [b.diagram_rows() for b in self.branches]
        return np.vstack(parts)

    def limit_evidence(self) -> dict:
        evidence: dict[tuple[int, int], list[str]] = {}
        for b in self.branches:
            evidence.setdefault(b.label, []).append(b.limit_direction)
        return evidence


def _run_branch(task: tuple) -> Branch:
    instant, direction, cont_cfg, ode_cfg, shooting_cfg, quad_tol = task
    try:
        return continue_branch(instant, direction, cont_cfg, ode_cfg, shooting_cfg, quad_tol)
    except (NumericalError, ValueError) as exc:
        return Branch(instant=instant, direction=direction, termination="failure", message=str(exc))


def diagram(
    instants_list: list[BifurcationInstant],
    cont_cfg: dict | None = None,
    ode_cfg: dict | None = None,
    shooting_cfg: dict | None = None,
    quad_tol: float = 1e-12,
    threads: int = 1,
    n_trivial: int = 201,
) -> Diagram:
    """Continue every instant in both directions and collect the (a, s)
    diagram together with the trivial branch.

    Pairwise disjointness is checked between distinct labels: the
    smallest distance between their accepted points must exceed the
    continuation resolution ``ds0``.
    """
    settings = _section("continuation", cont_cfg)
    tasks = [(inst, direction, cont_cfg, ode_cfg, shooting_cfg, quad_tol) for inst in instants_list for direction in (1, -1)]
    if threads > 1 and len(tasks) > 1:
        with Pool(processes=threads) as pool:
            branches = pool.map(_run_branch, tasks)
    else:
        branches = [_run_branch(task) for task in tasks]

    result = Diagram(branches=branches, trivial=trivial_branch(settings["a_min"], settings["a_max"], n_trivial), resolution=settings["ds0"])
    labels = sorted({b.label for b in branches})
    for i, first in enumerate(labels):
        for second in labels[i + 1 :]:
            pts_first = np.vstack([b.coordinates() for b in branches if b.label == first])
            pts_second = np.vstack([b.coordinates() for b in branches if b.label == second])
            result.distances[(first, second)] = min_distance(pts_first, pts_second)
    for b in branches:
        if b.termination == "failure":
            result.failures.append(f"B_{b.label} direction {b.direction:+d}: {b.message}")
    result.violations = properness_violations(branches, settings["s_max"])
    if not result.disjoint:
        logger.warning("Branch point sets closer than resolution %.1e: %s", result.resolution, result.distances)
    return result
