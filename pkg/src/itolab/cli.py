"""Experiment runner: declarative configs in, deterministic report tables out.

Subcommands: moments, rosenthal, integral, matrix, khintchine, suite.
Exit codes: 0 all hard assertions passed, 1 a check failed, 2 invalid
config, 3 resource budget exceeded.  Report-only rows never affect the
exit code.  ITOLAB_WORKERS sizes the work pool (default serial).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import checks as C
from . import randmat as RM
from .config import (CHECK_KEYS, ConfigError, ExperimentConfig, load_config,
                     parse_config, process_from_table)
from .instances import (random_element, random_independent_sequence,
                        random_positive_sequence, single_cell_process,
                        multi_cell_process)
from .lq import point_space
from .poisson import verify_poisson_moment_bounds
from .prob import BudgetExceededError, philox
from .report import FAIL, CheckReport

CSV_COLUMNS = ("check_id", "case_id", "p", "q", "lhs", "rhs", "constant",
               "provenance", "status", "tolerance", "seed", "runtime_ms")

SCALAR_ELEMENT = {"kind": "commutative", "weights": [1.0]}


def _stream(job_index: int, tag: str, k: int = 0) -> int:
    return (zlib.crc32(f"{tag}:{job_index}:{k}".encode()) & 0xFFFFFFFF) | (k << 32)


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def _law_from(spec) -> RM.EntryLaw:
    if spec == "rademacher":
        return RM.rademacher_law()
    if spec == "gaussian":
        return RM.gaussian_law()
    if isinstance(spec, dict) and set(spec) <= {"two_atom"}:
        params = spec["two_atom"]
        return RM.two_atom_law(float(params["a"]), float(params["prob"]),
                               bool(params.get("fourth_finite", True)))
    raise ConfigError(f"unknown entry law {spec!r}")


def _run_job(job: dict, idx: int, cfg: ExperimentConfig) -> list[CheckReport]:
    cid = job["check"]
    table = cfg.constants
    out: list[CheckReport] = []
    t0 = time.perf_counter()
    if cid == "khintchine":
        spec = job.get("element", {"kind": "matrix", "dims": [2, 2]})
        n = int(job.get("n_items", 4))
        for pi, p in enumerate(_as_list(job.get("p", 2.0))):
            for qi, q in enumerate(_as_list(job.get("q", 2.0))):
                for inst in range(int(job.get("instances", 3))):
                    gen = philox(cfg.seed, _stream(idx, cid, (pi * 97 + qi) * 211 + inst))
                    xs = [random_element(gen, spec) for _ in range(n)]
                    out.append(C.check_khintchine(xs, float(p), float(q),
                                                  table=table, seed=cfg.seed))
    elif cid == "kahane":
        spec = job.get("element", SCALAR_ELEMENT)
        n = int(job.get("n_items", 4))
        norm_exp = float(job.get("norm_exp", 2.0))
        for pi, p in enumerate(_as_list(job.get("p", 4.0))):
            for qi, q in enumerate(_as_list(job.get("q", 2.0))):
                for inst in range(int(job.get("instances", 3))):
                    gen = philox(cfg.seed, _stream(idx, cid, (pi * 97 + qi) * 211 + inst))
                    xs = [random_element(gen, spec) for _ in range(n)]
                    out.append(C.check_kahane(xs, float(p), float(q), norm_exp=norm_exp,
                                              table=table, seed=cfg.seed))
    elif cid in ("symmetrization", "hoffmann_jorgensen", "rosenthal_lq", "pq_ge2"):
        spec = job.get("element", SCALAR_ELEMENT)
        n = int(job.get("n_items", 3))
        atoms = int(job.get("n_atoms", 2))
        for pi, p in enumerate(_as_list(job.get("p", 2.0))):
            for qi, q in enumerate(_as_list(job.get("q", 2.0))):
                for inst in range(int(job.get("instances", 3))):
                    gen = philox(cfg.seed, _stream(idx, cid, (pi * 97 + qi) * 211 + inst))
                    seq = random_independent_sequence(gen, n, spec, atoms)
                    p_, q_ = float(p), float(q)
                    if cid == "symmetrization":
                        out.append(C.check_symmetrization(seq, p_, q_, seed=cfg.seed))
                    elif cid == "hoffmann_jorgensen":
                        out.append(C.check_hoffmann_jorgensen(seq, p_, q_, table=table,
                                                              seed=cfg.seed))
                    elif cid == "rosenthal_lq":
                        out.append(C.check_rosenthal_lq(seq, p_, q_, table=table,
                                                        seed=cfg.seed))
                    else:
                        out.append(C.check_pq_ge2_equivalence(seq, p_, q_, table=table,
                                                              seed=cfg.seed))
    elif cid == "rosenthal_scalar":
        n = int(job.get("n_items", 4))
        atoms = int(job.get("n_atoms", 2))
        for pi, p in enumerate(_as_list(job.get("p", 3.0))):
            for inst in range(int(job.get("instances", 5))):
                gen = philox(cfg.seed, _stream(idx, cid, pi * 211 + inst))
                seq = random_independent_sequence(gen, n, SCALAR_ELEMENT, atoms)
                out.append(C.check_rosenthal_scalar(seq, float(p), table=table,
                                                    seed=cfg.seed))
    elif cid == "rosenthal_positive":
        n = int(job.get("n_items", 4))
        atoms = int(job.get("n_atoms", 2))
        for pi, p in enumerate(_as_list(job.get("p", 3.0))):
            for inst in range(int(job.get("instances", 3))):
                gen = philox(cfg.seed, _stream(idx, cid, pi * 211 + inst))
                seq = random_positive_sequence(gen, n, atoms)
                out.append(C.check_rosenthal_positive(seq, float(p), seed=cfg.seed))
    elif cid == "type_cotype":
        spec = job.get("element", SCALAR_ELEMENT)
        n = int(job.get("n_items", 4))
        for qi, q in enumerate(_as_list(job.get("q", 3.0))):
            for inst in range(int(job.get("instances", 3))):
                gen = philox(cfg.seed, _stream(idx, cid, qi * 211 + inst))
                xs = [random_element(gen, spec) for _ in range(n)]
                out.append(C.check_type_cotype(xs, float(q), seed=cfg.seed))
    elif cid == "poisson_moment_bounds":
        grid_spec = job.get("lambda_grid", {})
        from .poisson import default_lambda_grid
        grid = default_lambda_grid(int(grid_spec.get("num", 60)),
                                   float(grid_spec.get("lo", 1e-4)),
                                   float(grid_spec.get("hi", 1.0)))
        out.extend(verify_poisson_moment_bounds(_as_list(job.get("p", [2, 3, 4])),
                                                grid, float(job.get("eps", 1e-12))))
    elif cid == "decoupling":
        F = process_from_table(job["process"], cfg.base_dir)
        for p in _as_list(job.get("p", 2.0)):
            for q in _as_list(job.get("q", 2.0)):
                out.append(C.check_decoupling(F, float(p), float(q), table=table,
                                              eps=float(job.get("eps", 1e-10)),
                                              seed=cfg.seed))
    elif cid == "doob":
        F = process_from_table(job["process"], cfg.base_dir)
        for p in _as_list(job.get("p", 2.0)):
            for q in _as_list(job.get("q", 2.0)):
                out.append(C.check_doob(F, float(p), float(q),
                                        n_samples=int(job.get("n_samples", cfg.samples)),
                                        seed=cfg.seed))
    elif cid == "ito_isomorphism":
        fam = [process_from_table(tbl, cfg.base_dir) for tbl in job["family"]]
        for p in _as_list(job.get("p", 2.0)):
            for q in _as_list(job.get("q", 2.0)):
                out.append(C.check_ito_isomorphism(fam, float(p), float(q), table=table,
                                                   tol=float(job.get("tol", 1e-4)),
                                                   n_samples=cfg.samples, seed=cfg.seed))
    elif cid in ("matrix_sum", "matrix_entries", "latala"):
        law = _law_from(job.get("law", "rademacher"))
        d1 = int(job.get("d1", 2))
        d2 = int(job.get("d2", d1))
        n_samp = int(job.get("n_samples", cfg.samples))
        force_mc = cfg.mode == "sampled"
        if cid == "matrix_sum":
            ens = RM.MatrixEnsemble(d1, d2, int(job.get("n", 4)), law, "summand")
            for p in _as_list(job.get("p", 2.0)):
                out.append(RM.bound_matrix_sum(ens, float(p), n_samples=n_samp,
                                               seed=cfg.seed, table=table,
                                               force_mc=force_mc))
        else:
            ens = RM.MatrixEnsemble(d1, d2, 1, law, "entries")
            for p in _as_list(job.get("p", 2.0)):
                if cid == "matrix_entries":
                    out.append(RM.bound_entry_matrix(ens, float(p), n_samples=n_samp,
                                                     seed=cfg.seed, table=table,
                                                     force_mc=force_mc))
                else:
                    out.append(RM.bound_latala(ens, float(p), n_samples=n_samp,
                                               seed=cfg.seed, table=table))
    elif cid == "seginer":
        if "a" in job:
            a = np.asarray(job["a"], dtype=float)
        else:
            d = int(job.get("d", 4))
            a = np.ones((d, d))
        for p in _as_list(job.get("p", 2.0)):
            out.append(RM.seginer_ensemble(a, float(p), seed=cfg.seed))
    else:
        raise ConfigError(f"unknown check id {cid!r}")
    elapsed = (time.perf_counter() - t0) * 1000.0 / max(len(out), 1)
    for r in out:
        r.runtime_ms = elapsed
        if r.seed is None:
            r.seed = cfg.seed
    return out


def run_jobs(cfg: ExperimentConfig) -> list[CheckReport]:
    workers = int(os.environ.get("ITOLAB_WORKERS", "1") or "1")
    jobs = list(enumerate(cfg.checks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda ij: _run_job(ij[1], ij[0], cfg), jobs))
    else:
        results = [_run_job(job, i, cfg) for i, job in jobs]
    reports = [r for chunk in results for r in chunk]
    order = {FAIL: 0}
    reports.sort(key=lambda r: (order.get(r.status, 1), r.check_id,
                                r.p if r.p is not None else -1.0,
                                r.q if r.q is not None else -1.0))
    return reports


# -- emission --------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.17g}"
    return str(v)


def _jsonify(v):
    if isinstance(v, dict):
        return {k: _jsonify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonify(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_jsonify(x) for x in v.tolist()]
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return v


def emit(reports: list[CheckReport], path: str, fmt: str = "csv",
         record_runtime: bool = False, empty_ok: bool = True) -> None:
    """Write reports as CSV or JSON with a stable column order and 17
    significant digits.  Runtime is zeroed unless requested, keeping outputs
    byte-identical across reruns with a fixed seed."""
    if not reports and not empty_ok:
        raise ValueError("no reports to emit")
    rows = []
    for r in reports:
        d = r.as_dict()
        if not record_runtime:
            d["runtime_ms"] = 0.0
        rows.append(d)
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for d in rows:
            lines.append(",".join(_fmt(d[c]) for c in CSV_COLUMNS))
        data = "\n".join(lines) + "\n"
    elif fmt == "json":
        payload = [{c: _jsonify(d[c]) for c in CSV_COLUMNS} | {"details": _jsonify(d["details"])}
                   for d in rows]
        data = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(data)


# -- default batteries -----------------------------------------------------------


def _default_process_table(lam: float = 0.5, value: float = 1.0) -> dict:
    return {"grid": {"time_points": [0.0, 1.0], "marks": [{"label": "A", "measure": lam}]},
            "cells": [{"i": 0, "j": 0, "value": [value]}],
            "element": {"kind": "commutative", "weights": [1.0]}}


def _two_cell_table(lams=(0.4, 0.8), values=(1.0, -2.0)) -> dict:
    nu = max(lams)
    pts = [0.0, lams[0] / nu, lams[0] / nu + lams[1] / nu]
    return {"grid": {"time_points": pts, "marks": [{"label": "A", "measure": nu}]},
            "cells": [{"i": 0, "j": 0, "value": [values[0]]},
                      {"i": 1, "j": 0, "value": [values[1]]}],
            "element": {"kind": "commutative", "weights": [1.0]}}


DEFAULT_BATTERIES = {
    "moments": [
        {"check": "poisson_moment_bounds", "p": [2, 2.5, 3, 4]},
    ],
    "khintchine": [
        {"check": "khintchine", "p": 2.0, "q": [2.0, 3.0, 4.0], "n_items": 4,
         "element": {"kind": "matrix", "dims": [2, 2]}, "instances": 3},
        {"check": "khintchine", "p": 2.0, "q": [2.0, 3.0], "n_items": 5,
         "element": SCALAR_ELEMENT, "instances": 3},
        {"check": "kahane", "p": 4.0, "q": 2.0, "n_items": 5, "instances": 3},
    ],
    "rosenthal": [
        {"check": "symmetrization", "p": [2.0, 3.0], "q": 2.0, "n_items": 3,
         "instances": 4},
        {"check": "rosenthal_scalar", "p": [2.0, 3.0, 4.0], "n_items": 4, "instances": 4},
        {"check": "rosenthal_positive", "p": 3.0, "n_items": 4, "instances": 3},
        {"check": "hoffmann_jorgensen", "p": 4.0, "q": 2.0, "n_items": 4, "instances": 3},
        {"check": "pq_ge2", "p": [2.0, 4.0], "q": [2.0, 2.5],
         "element": {"kind": "matrix", "dims": [2, 2]}, "n_items": 3, "instances": 2},
        {"check": "rosenthal_lq", "p": [3.0, 1.5], "q": [2.5, 1.5],
         "element": SCALAR_ELEMENT, "n_items": 3, "instances": 2},
    ],
    "integral": [
        {"check": "decoupling", "p": [2.0, 3.0], "q": 2.0,
         "process": _default_process_table()},
        {"check": "decoupling", "p": 2.0, "q": 3.0, "process": _two_cell_table()},
        {"check": "doob", "p": 3.0, "q": 2.0, "process": _two_cell_table(),
         "n_samples": 4000},
        {"check": "ito_isomorphism", "p": [3.0, 1.5], "q": [2.5],
         "family": [_default_process_table(0.05), _default_process_table(0.5),
                    _two_cell_table()]},
    ],
    "matrix": [
        {"check": "matrix_sum", "p": [2.0, 4.0], "d1": 2, "d2": 2, "n": 4,
         "law": "rademacher"},
        {"check": "matrix_sum", "p": 2.0, "d1": 4, "d2": 4, "n": 8, "law": "gaussian",
         "n_samples": 4000},
        {"check": "matrix_entries", "p": 2.0, "d1": 4, "d2": 4, "law": "rademacher",
         "n_samples": 4000},
        {"check": "latala", "p": 2.0, "d1": 4, "d2": 4, "law": "rademacher",
         "n_samples": 4000},
        {"check": "seginer", "p": 2.0, "d": 4},
    ],
}
DEFAULT_BATTERIES["suite"] = [job for name in
                              ("moments", "khintchine", "rosenthal", "integral", "matrix")
                              for job in DEFAULT_BATTERIES[name]]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="itolab",
                                     description="inequality verification lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("moments", "rosenthal", "integral", "matrix", "khintchine", "suite"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--mode", choices=("exact", "sampled"), default=None)
    args = parser.parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = parse_config({"version": 1, "checks": DEFAULT_BATTERIES[args.command]})
        if args.seed is not None:
            cfg.seed = args.seed
        if args.mode is not None:
            cfg.mode = args.mode
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        reports = run_jobs(cfg)
    except BudgetExceededError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    for r in reports:
        tag = {"pass": "pass", "fail": "FAIL"}.get(r.status, "info")
        pq = f" p={r.p:g}" if r.p is not None else ""
        pq += f" q={r.q:g}" if r.q is not None else ""
        print(f"[{tag}] {r.check_id}{pq} lhs={r.lhs:.6g} rhs={r.rhs:.6g}")
    if args.out:
        emit(reports, args.out, args.format, cfg.record_runtime)
        print(f"wrote {len(reports)} rows to {args.out}")
    return 1 if any(r.status == FAIL for r in reports) else 0


if __name__ == "__main__":
    sys.exit(main())
