import numpy as np

from MTE.utils.segments import closed_polyline_crossings, closed_polyline_intersections


def _closed(points):
    points = np.asarray(points, dtype=float)
    return np.vstack([points, points[:1]])


def test_square_has_no_crossings():
    assert closed_polyline_crossings(_closed([[0, 0], [1, 0], [1, 1], [0, 1]])) == []


def test_bowtie():
    crossings = closed_polyline_intersections(_closed([[0, 0], [1, 1], [1, 0], [0, 1]]))
    assert len(crossings) == 1
    c = crossings[0]
    assert c.point == (0.5, 0.5)
    assert (c.i, c.j) == (0, 2)
    assert (c.t, c.u) == (0.5, 0.5)


def test_figure_eight():
    t = np.linspace(0, 2 * np.pi, 401)
    points = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])
    (point,) = closed_polyline_crossings(points)
    assert np.hypot(*point) < 1e-12


def test_limacon_inner_loop():
    # the inner loop closes at the origin
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    r = 0.5 + np.cos(t)
    points = _closed(np.column_stack([r * np.cos(t), r * np.sin(t)]))
    crossings = closed_polyline_crossings(points)
    assert len(crossings) == 1
    assert abs(crossings[0][1]) < 1e-12
