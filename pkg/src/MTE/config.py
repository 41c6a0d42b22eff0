import copy
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path


def get_defaults() -> dict[str, dict[str, float | int | str]]:
    return {
        "geometry": {
            "quad_tol": 1e-12,
            "n_table": 2048,
            "guard_band": 1e-6,
        },
        "ode": {
            "rtol": 1e-10,
            "atol": 1e-12,
            "event_tol": 1e-12,
            "drift_tol": 1e-7,
            "max_steps": 200000,
            "s_guard": 1e-9,
        },
        "shooting": {
            "root_tol": 1e-10,
            "xtol": 1e-12,
            "h_s": 1e-6,
            "h_a": 1e-4,
            "mixed_h_s": 1e-3,
            "dead_band": 1e-10,
            "primitive_tol": 1e-6,
            "closed_tol": 1e-8,
            "samples_per_turn": 256,
        },
        "continuation": {
            "ds0": 1e-3,
            "ds_max": 0.05,
            "ds_min": 1e-6,
            "a_min": 0.05,
            "a_max": 20.0,
            "max_points": 5000,
            "s_max": 0.999,
            "newton_max_iter": 8,
            "max_halvings": 12,
            "newton_tol": 1e-9,
            "jac_h_s": 1e-6,
            "jac_h_a": 1e-5,
        },
        "lift": {
            "n_t": 512,
            "n_psi": 128,
            "drop_axis": 3,
        },
        "output": {
            "out": "out",
            "format": "csv",
            "threads": 1,
            "seed": 0,
        },
    }


def load_config(path: str | Path) -> dict:
    """Read a TOML config file laid out in the same sections as
    ``get_defaults``."""
    with open(path, "rb") as f:
        values = tomllib.load(f)
    defaults = get_defaults()
    for section, entries in values.items():
        if section not in defaults:
            raise ValueError(f"Unknown config section [{section}] in {path}")
        if not isinstance(entries, dict):
            raise ValueError(f"Config section [{section}] in {path} must be a table")
        for key in entries:
            if key not in defaults[section]:
                raise ValueError(f"Unknown config key {section}.{key} in {path}")
    return values


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one command run."""

    command: str
    geometry: dict = field(default_factory=dict)
    ode: dict = field(default_factory=dict)
    shooting: dict = field(default_factory=dict)
    continuation: dict = field(default_factory=dict)
    lift: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "geometry": dict(self.geometry),
            "ode": dict(self.ode),
            "shooting": dict(self.shooting),
            "continuation": dict(self.continuation),
            "lift": dict(self.lift),
            "output": dict(self.output),
            "params": dict(self.params),
        }


_POSITIVE_KEYS = {
    "geometry": ["quad_tol", "n_table", "guard_band"],
    "ode": ["rtol", "atol", "event_tol", "drift_tol", "max_steps", "s_guard"],
    "shooting": ["root_tol", "xtol", "h_s", "h_a", "mixed_h_s", "dead_band", "primitive_tol", "closed_tol", "samples_per_turn"],
    "continuation": [
        "ds0",
        "ds_max",
        "ds_min",
        "a_min",
        "a_max",
        "max_points",
        "newton_max_iter",
        "max_halvings",
        "newton_tol",
        "jac_h_s",
        "jac_h_a",
    ],
    "lift": ["n_t", "n_psi"],
    "output": ["threads"],
}


def resolve_config(command: str, file_values: dict | None = None, cli_values: dict | None = None, params: dict | None = None) -> RunConfig:
    """Merge defaults < config file < command-line flags and validate.

    ``cli_values`` uses the same ``{section: {key: value}}`` layout;
    entries set to ``None`` are treated as not given.
    """
    merged = copy.deepcopy(get_defaults())
    for source in (file_values or {}, cli_values or {}):
        for section, entries in source.items():
            for key, value in entries.items():
                if value is not None:
                    merged[section][key] = value
    for section, keys in _POSITIVE_KEYS.items():
        for key in keys:
            if not merged[section][key] > 0:
                raise ValueError(f"{section}.{key} must be positive, got {merged[section][key]}")
    cont = merged["continuation"]
    if cont["a_min"] >= cont["a_max"]:
        raise ValueError(f"Empty a-range: a_min={cont['a_min']} >= a_max={cont['a_max']}")
    if cont["ds_min"] > cont["ds0"] or cont["ds0"] > cont["ds_max"]:
        raise ValueError("Continuation steps must satisfy ds_min <= ds0 <= ds_max")
    if not 0 < cont["s_max"] < 1:
        raise ValueError(f"continuation.s_max must lie in (0, 1), got {cont['s_max']}")
    if merged["lift"]["drop_axis"] not in (0, 1, 2, 3):
        raise ValueError(f"lift.drop_axis must be one of 0, 1, 2, 3, got {merged['lift']['drop_axis']}")
    out_dir = Path(merged["output"]["out"])
    target = out_dir if out_dir.exists() else out_dir.parent
    if target.exists() and not os.access(target, os.W_OK):
        raise ValueError(f"Output directory {out_dir} is not writable")
    return RunConfig(command=command, params=dict(params or {}), **merged)
