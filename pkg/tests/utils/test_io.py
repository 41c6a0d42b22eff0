import json

import numpy as np

from MTE.utils.io import header_lines, write_csv, write_json
from MTE.version import __version__


def test_header_lines():
    assert header_lines(None) == [f"package_version: {__version__}"]
    lines = header_lines({"b": 1, "a": 2})
    assert lines[1] == 'config: {"a": 2, "b": 1}'


def test_write_csv(out_dir):
    path = write_csv(out_dir / "nested" / "rows.csv", ["a", "s"], [[0.1, 1 / 3], [2.0, -1e-17]], {"command": "test"})
    lines = path.read_text().splitlines()
    assert lines[0] == f"# package_version: {__version__}"
    assert lines[2] == "# a,s"
    data = np.loadtxt(path, delimiter=",", comments="#")
    assert data[0, 1] == 1 / 3
    assert data[1, 1] == -1e-17


def test_write_json(out_dir):
    payload = {"header": {"j": 1}, "values": np.array([1.5, 2.5]), "flag": np.bool_(True), "count": np.int64(3)}
    path = write_json(out_dir / "result.json", payload, {"command": "test"})
    document = json.loads(path.read_text())
    assert document["header"] == {"package_version": __version__, "config": {"command": "test"}, "j": 1}
    assert document["values"] == [1.5, 2.5]
    assert document["flag"] is True
    assert document["count"] == 3
    assert list(document) == sorted(document)
