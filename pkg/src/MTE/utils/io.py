import json
from pathlib import Path

import numpy as np

from MTE.version import __version__


def header_lines(config: dict | None) -> list[str]:
    """Provenance lines written at the top of every CSV file."""
    lines = [f"package_version: {__version__}"]
    if config is not None:
        lines.append("config: " + json.dumps(config, sort_keys=True))
    return lines


def write_csv(path: str | Path, columns: list[str], rows, config: dict | None = None) -> Path:
    """Write numeric rows at 17 significant digits with a commented
    provenance header followed by the column names."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    header = "\n".join(header_lines(config) + [",".join(columns)])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="# ")
    return path


def _to_builtin(value):
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        # repr round-trips, i.e. 17 significant digits when needed
        return float(value)
    return value


def write_json(path: str | Path, payload: dict, config: dict | None = None) -> Path:
    """Write ``payload`` under a ``header`` object holding the package
    version and resolved config, with sorted keys.

    A ``header`` entry in ``payload`` is merged into that object.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = dict(payload)
    header = {"package_version": __version__, "config": config or {}, **body.pop("header", {})}
    document = {"header": header, **body}
    with open(path, "w") as f:
        json.dump(_to_builtin(document), f, sort_keys=True, indent=2)
        f.write("\n")
    return path
