from pathlib import Path

import numpy as np

from MTE.lift.torus import TorusMesh
from MTE.utils.io import header_lines, write_json

AXES = ("Re z", "Im z", "Re w", "Im w")


def project_r3(mesh: TorusMesh, drop_axis: int = 3) -> np.ndarray:
    """Orthogonal projection R^4 -> R^3 dropping one coordinate of
    (Re z, Im z, Re w, Im w)."""
    if drop_axis not in range(4):
        raise ValueError(f"drop_axis must be one of 0, 1, 2, 3, got {drop_axis}")
    keep = [i for i in range(4) if i != drop_axis]
    return mesh.vertices[..., keep]


def write_obj(path: str | Path, mesh: TorusMesh, drop_axis: int = 3, config: dict | None = None) -> Path:
    """Write the projected mesh as an OBJ file of quads.

    The closing t-row is not repeated; faces wrap around in both grid
    directions.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    points = project_r3(mesh, drop_axis)[:-1]
    n_t, n_psi = points.shape[:2]
    index = np.arange(n_t * n_psi).reshape(n_t, n_psi) + 1
    faces = np.stack(
        [index, np.roll(index, -1, axis=0), np.roll(np.roll(index, -1, axis=0), -1, axis=1), np.roll(index, -1, axis=1)],
        axis=-1,
    ).reshape(-1, 4)
    kept = ", ".join(AXES[i] for i in range(4) if i != drop_axis)
    lines = [f"# {line}" for line in header_lines(config)]
    lines.append(f"# torus a={mesh.a!r} s={mesh.s!r} k={mesh.k} label={mesh.label}; coordinates ({kept})")
    lines.extend("v " + " ".join(f"{x:.17g}" for x in p) for p in points.reshape(-1, 3))
    lines.extend("f " + " ".join(str(i) for i in face) for face in faces)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_point_cloud(path: str | Path, mesh: TorusMesh, config: dict | None = None) -> Path:
    """Write the full R^4 vertex grid as JSON."""
    payload = {
        "header": {"a": mesh.a, "s": mesh.s, "k": mesh.k, "label": list(mesh.label) if mesh.label else None},
        "shape": list(mesh.shape),
        "axes": list(AXES),
        "max_residual": mesh.max_residual,
        "t": mesh.t,
        "psi": mesh.psi,
        "vertices": mesh.vertices.reshape(-1, 4),
    }
    return write_json(path, payload, config)
