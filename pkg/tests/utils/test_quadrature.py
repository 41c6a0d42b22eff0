import numpy as np
import pytest

from MTE.utils.quadrature import adaptive_panel_integrals, chebyshev_edges, gauss_legendre_intervals, gauss_legendre_panels


def test_gauss_legendre_polynomial_exact():
    # order n integrates degree 2n - 1 exactly
    value = gauss_legendre_intervals(lambda x: x**7 - 3 * x**2, 0.0, 2.0, 4)
    assert value == pytest.approx([2**8 / 8 - 8], abs=1e-12)


def test_gauss_legendre_reversed_interval():
    forward = gauss_legendre_intervals(np.exp, 0.0, 1.0, 8)
    backward = gauss_legendre_intervals(np.exp, 1.0, 0.0, 8)
    assert backward == pytest.approx(-forward)


def test_gauss_legendre_panels_sum():
    edges = np.linspace(0, np.pi, 9)
    panels = gauss_legendre_panels(np.sin, edges, 8)
    assert panels.shape == (8,)
    assert panels.sum() == pytest.approx(2.0, abs=1e-14)


def test_adaptive_panel_integrals():
    edges = chebyshev_edges(0.0, np.pi / 2, 17)
    panels, err, order = adaptive_panel_integrals(lambda x: np.sqrt(np.cos(x) ** 2 + 4 * np.sin(x) ** 2), edges, 1e-13)
    assert err <= 1e-13
    assert order >= 16
    reference = gauss_legendre_panels(lambda x: np.sqrt(np.cos(x) ** 2 + 4 * np.sin(x) ** 2), np.linspace(0, np.pi / 2, 257), 32).sum()
    assert panels.sum() == pytest.approx(reference, abs=1e-12)


def test_chebyshev_edges():
    edges = chebyshev_edges(1.0, 3.0, 5)
    assert edges[0] == 1.0 and edges[-1] == 3.0
    assert edges[2] == pytest.approx(2.0)
    assert np.all(np.diff(edges) > 0)
    # clustered towards the ends
    assert edges[1] - edges[0] < edges[2] - edges[1]
