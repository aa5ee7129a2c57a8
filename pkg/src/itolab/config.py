"""Experiment configs: versioned JSON schema, strict validation, builders.

A config is a JSON object:

    {
      "version": 1,
      "seed": 1234,
      "mode": "exact" | "sampled",
      "samples": 10000,
      "record_runtime": false,
      "constants": {"hj_factor": ..., "rosenthal_factor": ...,
                    "umd_constant": ..., "latala_constant": ..., "ito_band": ...},
      "checks": [ { "check": "<id>", ...check-specific keys... }, ... ]
    }

Unknown keys are rejected everywhere.  Processes and sequences are defined
by cell tables and atom tables, inline or via {"file": "path.json"}.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .checks import ConstantTable
from .lq import FiniteMeasureSpace
from .poisson import GridPartition
from .integrator import SimpleAdaptedProcess, deterministic_process
from .instances import element_space_of


class ConfigError(ValueError):
    """Invalid experiment configuration."""


_TOP_KEYS = {"version", "seed", "mode", "samples", "record_runtime", "constants", "checks"}
_CONSTANT_KEYS = {"hj_factor", "rosenthal_factor", "umd_constant", "latala_constant",
                  "ito_band"}

CHECK_KEYS = {
    "khintchine": {"check", "p", "q", "n_items", "element", "instances"},
    "kahane": {"check", "p", "q", "norm_exp", "n_items", "element", "instances"},
    "symmetrization": {"check", "p", "q", "n_items", "n_atoms", "element", "instances"},
    "rosenthal_scalar": {"check", "p", "n_items", "n_atoms", "instances"},
    "rosenthal_positive": {"check", "p", "n_items", "n_atoms", "instances"},
    "hoffmann_jorgensen": {"check", "p", "q", "n_items", "n_atoms", "element", "instances"},
    "rosenthal_lq": {"check", "p", "q", "n_items", "n_atoms", "element", "instances"},
    "pq_ge2": {"check", "p", "q", "n_items", "n_atoms", "element", "instances"},
    "type_cotype": {"check", "q", "n_items", "element", "instances"},
    "poisson_moment_bounds": {"check", "p", "lambda_grid", "eps"},
    "decoupling": {"check", "p", "q", "process", "eps"},
    "doob": {"check", "p", "q", "process", "n_samples"},
    "ito_isomorphism": {"check", "p", "q", "family", "tol"},
    "matrix_sum": {"check", "p", "d1", "d2", "n", "law", "n_samples"},
    "matrix_entries": {"check", "p", "d1", "d2", "law", "n_samples"},
    "latala": {"check", "p", "d1", "d2", "law", "n_samples"},
    "seginer": {"check", "p", "a", "d"},
}


def _reject_unknown(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")


@dataclass(eq=False)
class ExperimentConfig:
    seed: int = 12345
    mode: str = "exact"
    samples: int = 10_000
    record_runtime: bool = False
    constants: ConstantTable = field(default_factory=ConstantTable)
    checks: list = field(default_factory=list)
    base_dir: str = "."


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def parse_config(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    if raw.get("version") != 1:
        raise ConfigError("config requires \"version\": 1")
    mode = raw.get("mode", "exact")
    if mode not in ("exact", "sampled"):
        raise ConfigError(f"unknown mode {mode!r}")
    consts_raw = raw.get("constants", {})
    _reject_unknown(consts_raw, _CONSTANT_KEYS, "constants")
    constants = ConstantTable(**consts_raw)
    checks = raw.get("checks", [])
    if not isinstance(checks, list):
        raise ConfigError("checks must be a list")
    for i, job in enumerate(checks):
        if not isinstance(job, dict) or "check" not in job:
            raise ConfigError(f"checks[{i}] must be an object with a \"check\" key")
        cid = job["check"]
        if cid not in CHECK_KEYS:
            raise ConfigError(f"unknown check id {cid!r}")
        _reject_unknown(job, CHECK_KEYS[cid], f"checks[{i}] ({cid})")
    return ExperimentConfig(seed=int(raw.get("seed", 12345)), mode=mode,
                            samples=int(raw.get("samples", 10_000)),
                            record_runtime=bool(raw.get("record_runtime", False)),
                            constants=constants, checks=checks, base_dir=base_dir)


# -- table builders --------------------------------------------------------------


def _resolve_file(obj: dict, base_dir: str) -> dict:
    if set(obj) == {"file"}:
        with open(os.path.join(base_dir, obj["file"])) as fh:
            return json.load(fh)
    return obj


def _parse_complex(v):
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    if isinstance(v, (int, float)):
        return complex(v)
    raise ConfigError(f"cannot parse complex entry {v!r}")


def _parse_values(v, kind: str) -> np.ndarray:
    if kind == "commutative":
        return np.array([_parse_complex(x) for x in v])
    return np.array([[_parse_complex(x) for x in row] for row in v])


def process_from_table(obj: dict, base_dir: str = ".") -> SimpleAdaptedProcess:
    """Build a deterministic process from its grid and cell table."""
    obj = _resolve_file(obj, base_dir)
    _reject_unknown(obj, {"grid", "cells", "element"}, "process")
    grid_raw = obj["grid"]
    _reject_unknown(grid_raw, {"time_points", "marks"}, "process.grid")
    marks = grid_raw["marks"]
    labels = tuple(m["label"] for m in marks)
    measures = np.array([float(m["measure"]) for m in marks])
    grid = GridPartition(np.asarray(grid_raw["time_points"], dtype=float),
                         labels, measures)
    elem_spec = obj.get("element", {"kind": "commutative", "weights": [1.0]})
    es = element_space_of(elem_spec)
    kind = elem_spec.get("kind", "matrix")
    cells = {}
    for cell in obj["cells"]:
        _reject_unknown(cell, {"i", "j", "value"}, "process.cells[]")
        cells[(int(cell["i"]), int(cell["j"]))] = _parse_values(cell["value"], kind)
    return deterministic_process(grid, cells, es)
