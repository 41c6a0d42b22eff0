"""Closed-form bifurcation data of the Clifford geodesic.

Iterates of the Clifford geodesic are degenerate for f_k exactly at

    a^j_k = (j/k) / sqrt(4 - (j/k)^2),   0 < j < 2k, gcd(j, k) = 1,

the values where 2ak/sqrt(a^2 + 1) = j. The union over k is dense in
(0, inf) and never contains a = 1 (that would need j/k = sqrt(2)).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass(frozen=True, order=True)
class BifurcationInstant:
    a_jk: float
    j: int = field(compare=False)
    k: int = field(compare=False)

    @property
    def label(self) -> tuple[int, int]:
        return self.j, self.k


def check_label(j: int, k: int) -> None:
    if k < 1 or not 0 < j < 2 * k:
        raise ValueError(f"Need k >= 1 and 0 < j < 2k, got (j, k) = ({j}, {k})")
    if math.gcd(j, k) != 1:
        raise ValueError(f"(j, k) = ({j}, {k}) is not coprime")


def instant_value(j: int, k: int) -> float:
    """a^j_k for integers 0 < j < 2k (coprimality not required)."""
    if k < 1 or not 0 < j < 2 * k:
        raise ValueError(f"Need k >= 1 and 0 < j < 2k, got (j, k) = ({j}, {k})")
    q = j / k
    return q / math.sqrt(4 - q * q)


def instant_for_ratio(q: Fraction | float) -> BifurcationInstant:
    """The instant for a rational q = j/k in (0, 2), in lowest terms."""
    q = Fraction(q).limit_denominator(10**6) if not isinstance(q, Fraction) else q
    if not 0 < q < 2:
        raise ValueError(f"Ratio j/k must lie in (0, 2), got {q}")
    return BifurcationInstant(a_jk=instant_value(q.numerator, q.denominator), j=q.numerator, k=q.denominator)


def instants(k_max: int) -> list[BifurcationInstant]:
    """All instants with k <= ``k_max``, sorted by a_jk.

    Examples
    --------
    >>> [(b.j, b.k) for b in instants(2)]
    [(1, 2), (1, 1), (3, 2)]
    """
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    found = []
    for k in range(1, k_max + 1):
        for j in range(1, 2 * k):
            if math.gcd(j, k) == 1:
                found.append(BifurcationInstant(a_jk=instant_value(j, k), j=j, k=k))
    return sorted(found)


def instants_in_interval(k_max: int, a_lo: float, a_hi: float) -> list[BifurcationInstant]:
    return [b for b in instants(k_max) if a_lo <= b.a_jk <= a_hi]


def local_uniqueness(a: float, k: int, tol: float = 1e-12) -> tuple[bool, BifurcationInstant | None]:
    """Whether the k-fold Clifford geodesic is locally unique at ``a``.

    Returns ``(unique, nearest)`` where ``nearest`` is the closest
    instant a^j_k with 0 < j < 2k (any j, so iterates are included).
    """
    if a <= 0:
        raise ValueError(f"Eccentricity a must be positive, got {a}")
    candidates = [BifurcationInstant(a_jk=instant_value(j, k), j=j, k=k) for j in range(1, 2 * k)]
    nearest = min(candidates, key=lambda b: abs(b.a_jk - a))
    return abs(nearest.a_jk - a) > tol, nearest


def jacobi_frequency(a: float) -> float:
    """Frequency 2a/sqrt(a^2 + 1) of the radial Jacobi field along the
    Clifford geodesic."""
    return 2 * a / math.sqrt(a * a + 1)


def jacobi_eigenvalue(a: float, k: int, l: int, j: int, m: int) -> float:
    """Eigenvalue lambda^{k,l}(j, m) of the Jacobi operator of the
    (k, l)-fold covering of the Clifford torus."""
    if k < 1 or l < 1:
        raise ValueError(f"Covering orders must be positive, got (k, l) = ({k}, {l})")
    return 2 * (j * j / (k * k * a * a) + m * m / (l * l)) - 8 / (a * a + 1)


@dataclass(frozen=True)
class JacobiData:
    """Jacobi data of the Clifford geodesic at eccentricity ``a``.

    ``eigenvalues[(j, m)]`` holds lambda^{k,l}(j, m) for |j| <= j_max,
    |m| <= m_max.
    """

    a: float
    k: int
    l: int
    r_amplitude: float
    frequency: float
    eigenvalues: dict


def jacobi_data(a: float, beta_prime_0: float, k: int = 1, l: int = 1, j_max: int = 4, m_max: int = 2) -> JacobiData:
    table = {(j, m): jacobi_eigenvalue(a, k, l, j, m) for j in range(-j_max, j_max + 1) for m in range(-m_max, m_max + 1)}
    return JacobiData(a=a, k=k, l=l, r_amplitude=beta_prime_0, frequency=jacobi_frequency(a), eigenvalues=table)


def degenerate_jacobi_modes(a: float, k: int = 1, l: int = 1, j_max: int = 4, m_max: int = 4, tol: float = 1e-12) -> list[tuple[int, int]]:
    """Modes (j, m) with lambda^{k,l}(j, m) = 0 at ``a``.

    For the Clifford torus itself these are j = 0, m = +-1 at a = sqrt(3);
    j = +-1, m = 0 at a = 1/sqrt(3); and j, m = +-1 at a = 1.
    """
    return [
        (j, m)
        for j in range(-j_max, j_max + 1)
        for m in range(-m_max, m_max + 1)
        if abs(jacobi_eigenvalue(a, k, l, j, m)) <= tol * max(1.0, 8 / (a * a + 1))
    ]


def transversality_target(j: int, k: int, beta_prime_0: float) -> float:
    """Closed form of d^2 f_k / da ds at (a^j_k, 0)."""
    check_label(j, k)
    return beta_prime_0 * (-1) ** (j + 1) * (4 * k * k - j * j) ** 1.5 * np.pi * j / (4 * k**3)
