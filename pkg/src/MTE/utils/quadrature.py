from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def _legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre_intervals(integrand, lo, hi, order: int) -> np.ndarray:
    """Integrate ``integrand`` over each interval ``[lo[i], hi[i]]`` with a
    fixed-order Gauss–Legendre rule.

    ``integrand`` must accept numpy arrays. ``lo`` and ``hi`` broadcast
    against each other; ``hi < lo`` gives the negated integral.

    Examples
    --------
    >>> gauss_legendre_intervals(np.cos, np.array([0.0]), np.array([np.pi / 2]), 8)
    array([1.])
    """
    nodes, weights = _legendre_rule(order)
    lo, hi = np.broadcast_arrays(np.atleast_1d(np.asarray(lo, dtype=float)), np.atleast_1d(np.asarray(hi, dtype=float)))
    half = 0.5 * (hi - lo)
    x = 0.5 * (hi + lo)[:, None] + half[:, None] * nodes[None, :]
    return (integrand(x) * weights[None, :]).sum(axis=1) * half


def gauss_legendre_panels(integrand, edges: np.ndarray, order: int) -> np.ndarray:
    """One integral per panel ``[edges[i], edges[i+1]]``."""
    return gauss_legendre_intervals(integrand, edges[:-1], edges[1:], order)


def adaptive_panel_integrals(
    integrand, edges: np.ndarray, tol: float, order: int = 8, max_order: int = 128
) -> tuple[np.ndarray, float, int]:
    """Panel integrals accurate to ``tol`` in total.

    The order is doubled until the difference between the order-n and
    order-2n rules, summed over all panels, is below ``tol``. Returns the
    higher-order panel values, the final error estimate and the order
    that produced them.
    """
    coarse = gauss_legendre_panels(integrand, edges, order)
    while True:
        fine = gauss_legendre_panels(integrand, edges, 2 * order)
        err = float(np.abs(fine - coarse).sum())
        if err <= tol or 2 * order >= max_order:
            return fine, err, 2 * order
        order *= 2
        coarse = fine


def chebyshev_edges(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` Chebyshev–Lobatto points on ``[lo, hi]``, increasing,
    endpoints included."""
    k = np.arange(n)
    x = -np.cos(np.pi * k / (n - 1))
    edges = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
    edges[0], edges[-1] = lo, hi
    return edges
