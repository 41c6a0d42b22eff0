import json

import numpy as np
import pytest

from MTE.lift.export import project_r3, write_obj, write_point_cloud
from MTE.lift.torus import lift
from MTE.reduction.geodesic_flow import integrate


@pytest.fixture(scope="module")
def clifford_mesh(geometry_two):
    return lift(geometry_two, integrate(geometry_two, 0.0, 1), n_t=8, n_psi=4, label=(1, 1))


def test_project_r3(clifford_mesh):
    points = project_r3(clifford_mesh, 1)
    assert points.shape == (9, 4, 3)
    assert np.array_equal(points[..., 1], clifford_mesh.vertices[..., 2])
    with pytest.raises(ValueError):
        project_r3(clifford_mesh, 4)


def test_write_obj(clifford_mesh, out_dir):
    path = write_obj(out_dir / "torus.obj", clifford_mesh, config={"command": "lift"})
    lines = path.read_text().splitlines()
    vertices = [line for line in lines if line.startswith("v ")]
    faces = [line for line in lines if line.startswith("f ")]
    # closing t-row is dropped, faces wrap in t and psi
    assert len(vertices) == 8 * 4
    assert len(faces) == 8 * 4
    assert lines[0].startswith("# package_version: ")
    assert lines[1].startswith("# config: ")
    indices = {int(i) for face in faces for i in face.split()[1:]}
    assert indices == set(range(1, 33))
    first = [float(x) for x in vertices[0].split()[1:]]
    assert first == pytest.approx(clifford_mesh.vertices[0, 0, :3].tolist(), abs=1e-15)


def test_write_point_cloud(clifford_mesh, out_dir):
    path = write_point_cloud(out_dir / "torus.json", clifford_mesh, {"command": "lift"})
    document = json.loads(path.read_text())
    assert document["header"]["label"] == [1, 1]
    assert document["header"]["config"] == {"command": "lift"}
    assert document["shape"] == [9, 4]
    assert len(document["vertices"]) == 36
    assert document["vertices"][0] == pytest.approx(clifford_mesh.vertices[0, 0].tolist())
