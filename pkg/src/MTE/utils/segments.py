from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SegmentCrossing:
    """Crossing of segments ``i`` and ``j`` of a polyline at
    ``start[i] + t * seg[i] == start[j] + u * seg[j]``."""

    point: tuple[float, float]
    i: int
    j: int
    t: float
    u: float


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def closed_polyline_intersections(points: np.ndarray, slack: float = 1e-12, merge_dist: float = 1e-9) -> list[SegmentCrossing]:
    """Return the self-intersections of a closed polyline.

    ``points`` has shape (n, 2) and is closed, i.e. ``points[-1]`` equals
    ``points[0]``. Adjacent segments (including the wrap-around pair) are
    never compared. Each segment owns its start point but not its end
    point, so a crossing through a shared vertex is counted once.
    Crossings closer than ``merge_dist`` are merged.
    """
    points = np.asarray(points, dtype=float)
    start = points[:-1]
    seg = points[1:] - points[:-1]
    n = len(seg)
    found: list[SegmentCrossing] = []
    for i in range(n - 2):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if len(j) == 0:
            continue
        r = seg[i]
        s = seg[j]
        qp = start[j] - start[i]
        denom = _cross(np.broadcast_to(r, s.shape), s)
        parallel = np.abs(denom) <= slack * (np.linalg.norm(r) * np.linalg.norm(s, axis=1) + slack)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = _cross(qp, s) / denom
            u = _cross(qp, np.broadcast_to(r, s.shape)) / denom
        hit = ~parallel & (t >= -slack) & (t < 1.0 - slack) & (u >= -slack) & (u < 1.0 - slack)
        for jj, ti, ui in zip(j[hit], t[hit], u[hit]):
            p = start[i] + ti * r
            if all(np.hypot(*(p - np.array(c.point))) > merge_dist for c in found):
                found.append(SegmentCrossing(point=(float(p[0]), float(p[1])), i=i, j=int(jj), t=float(ti), u=float(ui)))
    return found


def closed_polyline_crossings(points: np.ndarray, slack: float = 1e-12, merge_dist: float = 1e-9) -> list[tuple[float, float]]:
    """Self-intersection points of a closed polyline.

    Examples
    --------
    A figure-eight crosses itself once at the origin:

    >>> t = np.linspace(0, 2 * np.pi, 401)
    >>> pts = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])
    >>> len(closed_polyline_crossings(pts))
    1
    """
    return [c.point for c in closed_polyline_intersections(points, slack, merge_dist)]
