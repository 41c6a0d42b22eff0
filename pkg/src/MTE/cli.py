"""Command-line front end, installed as ``mte``.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

import functools
import logging
from pathlib import Path

import click
import numpy as np

from MTE.bifurcation.branch import LABEL_FIELDS, continue_branch, diagram, iota_parity, label_payload, label_rows
from MTE.bifurcation.instants import check_label, degenerate_jacobi_modes, instants, instants_in_interval, jacobi_data, local_uniqueness
from MTE.bifurcation.shooting import classify, find_root, scan_sign_changes, shoot
from MTE.config import RunConfig, load_config, resolve_config
from MTE.errors import NoSignChangeError, NumericalError
from MTE.lift.export import write_obj, write_point_cloud
from MTE.lift.torus import embedding_check, lift, mesh_area, project_mesh, torus_area
from MTE.reduction.geodesic_flow import integrate, sample_rows
from MTE.reduction.metric_profile import (
    beta_prime,
    build_geometry,
    clifford_length,
    clifford_speed,
    orbit_space_point,
    phi_of_s,
    volume_function,
)
from MTE.selftest import CHECKS, run_selftest
from MTE.utils.io import write_csv, write_json
from MTE.version import __version__

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["t", "rho", "theta", "rho_dot", "theta_dot", "clairaut_drift", "energy_drift"]
OPEN_S = click.FloatRange(-1.0, 1.0, min_open=True, max_open=True)
POSITIVE = click.FloatRange(0.0, min_open=True)


def common_options(func):
    """Tolerance and output flags shared by every subcommand."""
    options = [
        click.option("--ode-rtol", type=POSITIVE, default=None, help="Relative tolerance of the geodesic integrator."),
        click.option("--ode-atol", type=POSITIVE, default=None, help="Absolute tolerance of the geodesic integrator."),
        click.option("--root-tol", type=POSITIVE, default=None, help="Residual bound |f_k| for accepted roots."),
        click.option("--quad-tol", type=POSITIVE, default=None, help="Quadrature tolerance of the arclength table."),
        click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory."),
        click.option("--format", "fmt", type=click.Choice(["csv", "json", "obj"]), default=None, help="Output format."),
        click.option("--threads", type=click.IntRange(1), default=None, help="Worker processes (diagram only)."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def continuation_options(func):
    options = [
        click.option("--a-min", type=POSITIVE, default=None, help="Stop when a drops below this value."),
        click.option("--a-max", type=POSITIVE, default=None, help="Stop when a exceeds this value."),
        click.option("--ds-max", type=POSITIVE, default=None, help="Largest pseudo-arclength step."),
        click.option("--max-points", type=click.IntRange(1), default=None, help="Accepted points per half-branch."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _resolve(ctx: click.Context, command: str, params: dict, flags: dict) -> RunConfig:
    cli_values = {
        "geometry": {"quad_tol": flags.get("quad_tol")},
        "ode": {"rtol": flags.get("ode_rtol"), "atol": flags.get("ode_atol")},
        "shooting": {"root_tol": flags.get("root_tol")},
        "continuation": {key: flags.get(key) for key in ("a_min", "a_max", "ds_max", "max_points")},
        "output": {"out": flags.get("out"), "format": flags.get("fmt"), "threads": flags.get("threads"), "seed": flags.get("seed")},
    }
    try:
        return resolve_config(command, ctx.obj.get("file_values"), cli_values, params)
    except ValueError as exc:
        raise click.UsageError(str(exc), ctx=ctx) from exc


def numerical_exit(func):
    """Report ``NumericalError`` with exit code 1 and domain errors as
    usage errors (exit code 2)."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except NumericalError as exc:
            click.echo(f"Error: {exc}", err=True)
            raise SystemExit(1) from exc
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc

    return wrapper


def _geometry(cfg: RunConfig, a: float):
    return build_geometry(a, cfg.geometry["quad_tol"], cfg.geometry["n_table"], cfg.geometry["guard_band"])


def _out(cfg: RunConfig) -> Path:
    return Path(cfg.output["out"])


@click.group()
@click.version_option(__version__, prog_name="mte")
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug output.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="TOML config file.")
@click.pass_context
def cli(ctx: click.Context, verbose: int, config_path: str | None):
    """Minimal tori in ellipsoids: closed geodesics of the orbit space,
    their bifurcation branches and lifted tori."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = load_config(config_path) if config_path else {}
    except ValueError as exc:
        raise click.UsageError(str(exc), ctx=ctx) from exc
    ctx.obj = {"file_values": file_values}


@cli.command("instants")
@click.option("--kmax", type=click.IntRange(1), default=3, show_default=True)
@common_options
@click.pass_context
@numerical_exit
def cmd_instants(ctx, kmax, **flags):
    """Bifurcation instants a^j_k for k <= KMAX, sorted by a."""
    cfg = _resolve(ctx, "instants", {"kmax": kmax}, flags)
    rows = [(b.j, b.k, b.a_jk) for b in instants(kmax)]
    if cfg.output["format"] == "json":
        path = write_json(_out(cfg) / "instants.json", {"instants": [{"j": j, "k": k, "a_jk": a} for j, k, a in rows]}, cfg.as_dict())
    else:
        path = write_csv(_out(cfg) / "instants.csv", ["j", "k", "a_jk"], rows, cfg.as_dict())
    for j, k, a in rows:
        click.echo(f"{j:3d} {k:3d} {a:.17g}")
    logger.info("Wrote %s", path)


@cli.command("shoot")
@click.option("--a", "a", type=POSITIVE, required=True, help="Eccentricity.")
@click.option("--s", "s", type=OPEN_S, required=True, help="Shooting parameter in (-1, 1).")
@click.option("--k", "k", type=click.IntRange(1), default=1, show_default=True)
@common_options
@click.pass_context
@numerical_exit
def cmd_shoot(ctx, a, s, k, **flags):
    """Integrate gamma_{a,s} to its k-th crossing and report f_k."""
    cfg = _resolve(ctx, "shoot", {"a": a, "s": s, "k": k}, flags)
    g = _geometry(cfg, a)
    result, traj = shoot(g, s, k, cfg.ode)
    write_csv(_out(cfg) / "trajectory.csv", TRAJECTORY_COLUMNS, sample_rows(traj), cfg.as_dict())
    unique, nearest = local_uniqueness(a, k)
    phi0 = phi_of_s(s)
    jacobi = jacobi_data(a, beta_prime(g, 0.0))
    diagnostics = {
        "a": a,
        "s": s,
        "k": k,
        "f_value": result.f_value,
        "ell_k": result.ell_k,
        "crossings": [{"m": m, "t": t} for m, t in traj.crossing_events],
        "clairaut0": traj.clairaut0,
        "energy0": traj.energy0,
        "clairaut_drift": traj.clairaut_drift,
        "energy_drift": traj.energy_drift,
        "n_steps": traj.n_steps,
        "trivial_locally_unique": unique,
        "nearest_instant": {"j": nearest.j, "k": nearest.k, "a_jk": nearest.a_jk},
        "instants_nearby": [{"j": b.j, "k": b.k, "a_jk": b.a_jk} for b in instants_in_interval(k, a / 1.1, a * 1.1)],
        "start_point": orbit_space_point(a, phi0, 0.0),
        "start_orbit_length": volume_function(a, a * np.sin(phi0)),
        "clifford": {"length": clifford_length(a), "speed": clifford_speed(a)},
        "jacobi": {"frequency": jacobi.frequency, "r_amplitude": jacobi.r_amplitude, "degenerate_modes": degenerate_jacobi_modes(a)},
    }
    write_json(_out(cfg) / "shoot.json", diagnostics, cfg.as_dict())
    click.echo(f"f_{k} = {result.f_value:.17g}")
    click.echo(f"ell_{k} = {result.ell_k:.17g}")
    click.echo(f"drift clairaut = {traj.clairaut_drift:.3e}, energy = {traj.energy_drift:.3e}")


@cli.command("solve")
@click.option("--a", "a", type=POSITIVE, required=True, help="Eccentricity.")
@click.option("--k", "k", type=click.IntRange(1), default=1, show_default=True)
@click.option("--s-lo", type=OPEN_S, default=None, help="Lower end of a root bracket.")
@click.option("--s-hi", type=OPEN_S, default=None, help="Upper end of a root bracket.")
@click.option("--n-scan", type=click.IntRange(3), default=400, show_default=True, help="Grid points when scanning (-s_max, s_max).")
@common_options
@click.pass_context
@numerical_exit
def cmd_solve(ctx, a, k, s_lo, s_hi, n_scan, **flags):
    """Find and classify closed geodesics gamma_{a,s} with f_k(a, s) = 0."""
    cfg = _resolve(ctx, "solve", {"a": a, "k": k, "s_lo": s_lo, "s_hi": s_hi, "n_scan": n_scan}, flags)
    g = _geometry(cfg, a)
    if (s_lo is None) != (s_hi is None):
        raise click.UsageError("Give both --s-lo and --s-hi, or neither to scan")
    if s_lo is not None:
        brackets = [(s_lo, s_hi)]
    else:
        s_max = 0.95
        brackets = scan_sign_changes(g, k, np.linspace(-s_max, s_max, n_scan), cfg.ode)
    roots = []
    for bracket in brackets:
        root = find_root(g, k, bracket, cfg.ode, cfg.shooting)
        c = classify(g, root.s, k, cfg.ode, cfg.shooting)
        roots.append(
            {
                "s": root.s,
                "f_value": root.f_value,
                "ell_k": root.ell_k,
                "converged": root.converged,
                "is_simple": c.is_simple,
                "is_primitive": c.is_primitive,
                "winding": c.winding,
                "clifford_intersections": c.clifford_intersections,
                "self_intersections": c.self_intersections_on_diameter,
                "star_shaped": c.star_shaped,
                "degenerate": c.degenerate,
            }
        )
        click.echo(f"s = {root.s:.17g}  f = {root.f_value:.3e}  invariants = {c.invariants}")
    write_json(_out(cfg) / "roots.json", {"a": a, "k": k, "roots": roots}, cfg.as_dict())
    if not roots:
        click.echo("No sign change of f_k found")


def _write_label(cfg: RunConfig, halves: list) -> None:
    j, k = halves[0].label
    stem = _out(cfg) / f"branch_{j}_{k}"
    write_json(stem.with_suffix(".json"), label_payload(halves), cfg.as_dict())
    write_csv(stem.with_suffix(".csv"), LABEL_FIELDS, label_rows(halves), cfg.as_dict())


@cli.command("branch")
@click.option("--j", "j", type=click.IntRange(1), required=True)
@click.option("--k", "k", type=click.IntRange(1), required=True)
@continuation_options
@common_options
@click.pass_context
@numerical_exit
def cmd_branch(ctx, j, k, **flags):
    """Continue B_(j,k) from (a^j_k, 0) in both directions of s."""
    check_label(j, k)
    cfg = _resolve(ctx, "branch", {"j": j, "k": k}, flags)
    instant = next(b for b in instants(k) if b.label == (j, k))
    halves = []
    for direction in (1, -1):
        branch = continue_branch(instant, direction, cfg.continuation, cfg.ode, cfg.shooting, cfg.geometry["quad_tol"])
        halves.append(branch)
        click.echo(f"B_({j},{k}) {direction:+d}: {len(branch.points)} points, {branch.termination} {branch.message}".rstrip())
        if direction > 0:
            parity = iota_parity(branch, ode_cfg=cfg.ode, shooting_cfg=cfg.shooting, quad_tol=cfg.geometry["quad_tol"])
            click.echo(f"iota parity preserved: {parity['preserved']}")
    _write_label(cfg, halves)


@cli.command("diagram")
@click.option("--kmax", type=click.IntRange(0), default=2, show_default=True, help="Continue every instant with k <= KMAX.")
@continuation_options
@common_options
@click.pass_context
@numerical_exit
def cmd_diagram(ctx, kmax, **flags):
    """Continue all branches with k <= KMAX and write the (a, s) diagram."""
    cfg = _resolve(ctx, "diagram", {"kmax": kmax}, flags)
    labels = instants(kmax) if kmax >= 1 else []
    result = diagram(labels, cfg.continuation, cfg.ode, cfg.shooting, cfg.geometry["quad_tol"], cfg.output["threads"])
    by_label: dict = {}
    for branch in result.branches:
        by_label.setdefault(branch.label, []).append(branch)
    for halves in by_label.values():
        _write_label(cfg, halves)
    write_csv(_out(cfg) / "trivial_branch.csv", ["a", "s", "j", "k"], result.trivial, cfg.as_dict())
    write_csv(_out(cfg) / "diagram.csv", ["a", "s", "j", "k"], result.rows(), cfg.as_dict())
    summary = {
        "disjoint": result.disjoint,
        "resolution": result.resolution,
        "distances": [{"first": list(p), "second": list(q), "distance": d} for (p, q), d in result.distances.items()],
        "failures": result.failures,
        "limit_evidence": [{"label": list(label), "directions": dirs} for label, dirs in sorted(result.limit_evidence().items())],
        "properness_violations": [{"label": list(label), "a": a, "s": s} for label, a, s in result.violations],
    }
    write_json(_out(cfg) / "diagram.json", summary, cfg.as_dict())
    for branch in result.branches:
        click.echo(f"B_{branch.label} {branch.direction:+d}: {len(branch.points)} points, {branch.termination}")
    click.echo(f"disjoint: {result.disjoint}")
    for failure in result.failures:
        click.echo(f"failure: {failure}", err=True)


def _refine_root(g, s: float, k: int, cfg: RunConfig):
    """Closest root of f_k to ``s`` found in brackets widened by 4 from
    s +- 1e-3."""
    step = 1e-3
    while True:
        bracket = (max(s - step, -0.99), min(s + step, 0.99))
        try:
            return find_root(g, k, bracket, cfg.ode, cfg.shooting)
        except NoSignChangeError:
            if step > 0.5:
                raise
            step *= 4


@cli.command("lift")
@click.option("--a", "a", type=POSITIVE, required=True, help="Eccentricity.")
@click.option("--s", "s", type=OPEN_S, default=0.0, show_default=True, help="Shooting parameter of a closed geodesic.")
@click.option("--k", "k", type=click.IntRange(1), default=1, show_default=True)
@click.option("--j", "j", type=click.IntRange(1), default=None, help="Branch label carried into the export.")
@click.option("--refine/--no-refine", default=True, show_default=True, help="Polish s to a root of f_k first.")
@click.option("--n-t", type=click.IntRange(4), default=None, help="Samples per winding.")
@click.option("--n-psi", type=click.IntRange(3), default=None, help="Samples of the circle orbit.")
@click.option("--drop-axis", type=click.IntRange(0, 3), default=None, help="Coordinate dropped for the OBJ projection.")
@common_options
@click.pass_context
@numerical_exit
def cmd_lift(ctx, a, s, k, j, refine, n_t, n_psi, drop_axis, **flags):
    """Lift a closed geodesic to the minimal torus in the ellipsoid."""
    params = {"a": a, "s": s, "k": k, "j": j, "refine": refine}
    cfg = _resolve(ctx, "lift", params, flags)
    lift_cfg = dict(cfg.lift)
    lift_cfg.update({key: value for key, value in (("n_t", n_t), ("n_psi", n_psi), ("drop_axis", drop_axis)) if value is not None})
    g = _geometry(cfg, a)
    result, traj = shoot(g, s, k, cfg.ode)
    if refine and abs(result.f_value) > cfg.shooting["root_tol"]:
        s = _refine_root(g, s, k, cfg).s
        traj = integrate(g, s, k, cfg.ode)
    label = (j, k) if j else None
    mesh = lift(g, traj, lift_cfg["n_t"], lift_cfg["n_psi"], cfg.shooting["closed_tol"], label)
    area = torus_area(g, traj)
    report = embedding_check(traj, cfg.shooting["samples_per_turn"])
    rho, theta = project_mesh(g, mesh)
    states = traj.states(mesh.t)
    quotient_error = max(float(np.max(np.abs(rho - states["rho"]))), float(np.max(np.abs(theta - states["theta"]))))
    if cfg.output["format"] in ("obj", "csv"):
        write_obj(_out(cfg) / "torus.obj", mesh, lift_cfg["drop_axis"], cfg.as_dict())
    write_point_cloud(_out(cfg) / "torus.json", mesh, cfg.as_dict())
    write_json(
        _out(cfg) / "lift.json",
        {
            "a": a,
            "s": s,
            "k": k,
            "area": area,
            "mesh_area": mesh_area(mesh),
            "max_residual": mesh.max_residual,
            "quotient_error": quotient_error,
            "embedded": report.embedded,
            "crossing_points": report.crossing_points,
        },
        cfg.as_dict(),
    )
    click.echo(f"area = {area:.17g}")
    click.echo(f"embedded = {str(report.embedded).lower()}, crossings = {len(report.crossing_points)}")
    click.echo(f"max residual = {mesh.max_residual:.3e}")


@cli.command("selftest")
@click.option("--quick", is_flag=True, help="Smaller grids for a fast smoke run.")
@click.option("--only", multiple=True, type=click.Choice([name for name, _ in CHECKS]), help="Run only the named checks.")
@click.option("--seed", type=int, default=None, help="Seed for sampled checks.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.pass_context
def cmd_selftest(ctx, quick, only, seed, **flags):
    """Run the acceptance checks and exit 1 if any of them fails."""
    flags["seed"] = seed
    cfg = _resolve(ctx, "selftest", {"quick": quick, "only": list(only)}, flags)
    results = run_selftest(seed=cfg.output["seed"], quick=quick, only=list(only) or None)
    for r in results:
        click.echo(f"{'ok' if r.passed else 'FAIL':4s} {r.name:16s} {r.seconds:8.1f}s  {r.detail}")
    payload = {"results": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]}
    write_json(_out(cfg) / "selftest.json", payload, cfg.as_dict())
    if not all(r.passed for r in results):
        raise SystemExit(1)


def main():
    cli(prog_name="mte")
