import numpy as np
import pytest
from scipy.optimize import brentq

from MTE.bifurcation.instants import instant_value, instants
from MTE.bifurcation.shooting import (
    classify,
    closed_form_dfds,
    dfds_at_zero,
    f_k,
    find_root,
    jacobi_solution,
    mixed_partial,
    scan_sign_changes,
    shoot,
)
from MTE.config import get_defaults
from MTE.errors import NoSignChangeError, NumericalError
from MTE.reduction.metric_profile import beta_prime, build_geometry


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_clifford_is_a_root(a, k):
    assert abs(f_k(build_geometry(a), 0.0, k).f_value) <= 1e-10


def test_shoot_returns_trajectory(geometry_two):
    result, traj = shoot(geometry_two, 0.2, 2)
    assert result.k == 2 and result.s == 0.2 and result.a == 2.0
    assert result.ell_k == pytest.approx(traj.ell(2))
    assert result.f_value == pytest.approx(traj.state(traj.ell(2)).rho_dot)


def test_jacobi_solution(geometry_two):
    r, r_dot = jacobi_solution(geometry_two, 0.0)
    assert r == pytest.approx(beta_prime(geometry_two, 0.0))
    assert r_dot == 0.0
    omega = 4 / np.sqrt(5)
    assert closed_form_dfds(geometry_two, 1) == pytest.approx(-beta_prime(geometry_two, 0.0) * omega * np.sin(omega * np.pi))


@pytest.mark.parametrize("a", [0.3, 0.9, 2.0])
@pytest.mark.parametrize("k", [1, 2])
def test_dfds_at_zero(a, k):
    check = dfds_at_zero(build_geometry(a), k)
    assert check.relative_error <= 1e-5


def test_dfds_vanishes_at_instant():
    check = dfds_at_zero(build_geometry(instant_value(1, 1)), 1)
    assert abs(check.closed_form) <= 1e-12
    assert abs(check.finite_difference) <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_dfds_zeros_match_instants(k):
    def dfds(a):
        return dfds_at_zero(build_geometry(a), k).finite_difference

    grid = np.linspace(0.2, 3.0, 60)
    values = np.array([dfds(a) for a in grid])
    changes = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
    # zeros sit at q = j/k for every j < 2k, reduced labels divide k
    expected = [b.a_jk for b in instants(k) if k % b.k == 0 and 0.2 < b.a_jk < 3.0]
    assert len(changes) == len(expected)
    for i, a_jk in zip(changes, expected):
        assert brentq(dfds, grid[i], grid[i + 1], xtol=1e-12) == pytest.approx(a_jk, abs=1e-6)


def test_dfds_at_zero_rejects(geometry_round):
    with pytest.raises(ValueError):
        dfds_at_zero(geometry_round, 1, h=0.6)


@pytest.mark.parametrize("j, k", [(1, 1), (1, 2), (3, 2)])
def test_mixed_partial(j, k):
    check = mixed_partial(j, k)
    assert check.a_jk == pytest.approx(instant_value(j, k))
    assert check.relative_error <= 1e-3


def test_mixed_partial_rejects():
    with pytest.raises(ValueError):
        mixed_partial(2, 2)
    with pytest.raises(ValueError):
        mixed_partial(1, 2, h_a=1.0)
    with pytest.raises(ValueError):
        mixed_partial(1, 2, h_s=0.6)


def test_mixed_partial_inner_step():
    assert get_defaults()["shooting"]["mixed_h_s"] == 1e-3
    check = mixed_partial(1, 1, h_s=1e-4)
    assert check.relative_error <= 1e-3


def test_find_root(b11_root):
    assert b11_root.converged
    assert abs(b11_root.f_value) <= 1e-10
    assert 0.02 < b11_root.s < 0.95
    assert b11_root.iterations > 0


def test_find_root_no_sign_change(geometry_half):
    with pytest.raises(NoSignChangeError):
        find_root(geometry_half, 1, (1e-3, 2e-3))
    # NoSignChangeError is both a NumericalError and a ValueError
    with pytest.raises(NumericalError):
        find_root(geometry_half, 1, (1e-3, 2e-3))


def test_find_root_degenerate_bracket(geometry_half):
    with pytest.raises(ValueError):
        find_root(geometry_half, 1, (0.3, 0.3))


def test_scan_sign_changes(geometry_half, b11_root):
    brackets = scan_sign_changes(geometry_half, 1, np.linspace(0.02, 0.95, 94))
    lo, hi = brackets[0]
    assert lo <= b11_root.s <= hi
    assert scan_sign_changes(geometry_half, 1, [0.001, 0.002]) == []


def test_classify_b11(geometry_half, b11_root):
    c = classify(geometry_half, b11_root.s, 1)
    assert c.is_closed and c.is_simple and c.is_primitive
    assert c.invariants == (1, 2, 0)
    assert c.star_shaped
    assert not c.degenerate
    assert c.f_lower == {}


def test_classify_b11_as_double_cover(geometry_half, b11_root):
    c = classify(geometry_half, b11_root.s, 2)
    assert c.is_closed and not c.is_primitive
    assert c.winding == 1
    assert c.invariants == (1, 2, 0)
    assert abs(c.f_lower[1]) <= 1e-8


def test_classify_clifford():
    c = classify(build_geometry(0.8), 0.0, 1)
    assert c.invariants == (1, 0, 0)
    assert c.is_simple and not c.degenerate


def test_classify_open_geodesic(geometry_half):
    c = classify(geometry_half, 0.001, 1)
    assert not c.is_closed
    assert c.degenerate
