"""Benchmark sweeps over generated instances.

The ``table1`` grid keeps the published layout (five blocks of five rows,
each block varying one of n, m, K, S, A around a base point) but uses
desk-scale dimensions so the in-repo solver finishes every run quickly.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .generator import GenParams, generate_instance, stream
from .oracle import brute_force_solve
from .reformulation import BigMValidityError, solve_integrated

FIELDS = ["n", "m", "K", "S", "A", "rep", "seed", "method", "status", "objective", "solve_ms", "nodes"]
SUMMARY_FIELDS = ["block", "n", "m", "K", "S", "A", "runs", "optimal", "mean_solve_ms", "mean_nodes"]
DIMS = ("n", "m", "K", "S", "A")
WORKERS_ENV = "MDPDESIGN_WORKERS"

# published rows: base (80, 40, 20, 10, 20) with one coordinate varied per block
PUBLISHED_BASE = {"n": 80, "m": 40, "K": 20, "S": 10, "A": 20}
PUBLISHED_BLOCKS = {
    "n": [20, 40, 80, 160, 320],
    "m": [10, 20, 40, 80, 160],
    "K": [5, 10, 20, 40, 80],
    "S": [2, 4, 8, 16, 32],
    "A": [5, 10, 20, 40, 80],
}

DESK_BASE = {"n": 8, "m": 4, "K": 2, "S": 2, "A": 2}
DESK_BLOCKS = {
    "n": [2, 4, 8, 16, 32],
    "m": [1, 2, 4, 8, 16],
    "K": [1, 2, 4, 8, 16],
    "S": [2, 4, 8, 16, 32],
    "A": [1, 2, 4, 8, 16],
}


def expand_grid(base: dict, blocks: dict) -> list:
    """Rows as ``(block, dims)`` in block order, one per varied value."""
    rows = []
    for name in DIMS:
        for value in blocks.get(name, []):
            dims = dict(base)
            dims[name] = int(value)
            rows.append((name, dims))
    return rows


def table1_grid(scale: str = "desk") -> list:
    if scale == "published":
        return expand_grid(PUBLISHED_BASE, PUBLISHED_BLOCKS)
    if scale == "desk":
        return expand_grid(DESK_BASE, DESK_BLOCKS)
    raise ValueError(f"unknown grid scale {scale!r}")


def load_grid(path) -> list:
    """A grid file is JSON: ``{"base": {...}, "blocks": {...}}`` or ``{"rows": [{...}, ...]}``."""
    with open(path) as fh:
        data = json.load(fh)
    if "rows" in data:
        out = []
        for row in data["rows"]:
            missing = [d for d in DIMS if d not in row]
            if missing:
                raise ValueError(f"grid row {row} lacks {missing}")
            out.append((row.get("block", "custom"), {d: int(row[d]) for d in DIMS}))
        return out
    base = data.get("base", DESK_BASE)
    return expand_grid({d: int(base[d]) for d in DIMS}, data.get("blocks", {}))


def run_seed(seed: int, row: int, rep: int) -> int:
    """Derived per-run seed, stable under reordering of the sweep."""
    return int(stream(seed, 4, row, rep).integers(0, 2**63))


def run_one(task) -> dict:
    """Generate and solve one instance; failures come back as a status."""
    dims, rep, seed, method, bigm, engine, node_limit = task
    rec = dict(dims)
    rec.update(rep=rep, seed=seed, method=method, status="", objective="", solve_ms="", nodes="")
    try:
        inst = generate_instance(GenParams(seed=seed, **dims))
        t0 = time.perf_counter()
        if method == "oracle":
            sol = brute_force_solve(inst)
        else:
            sol = solve_integrated(inst, bigm, engine=engine, node_limit=node_limit)
        rec["solve_ms"] = f"{(time.perf_counter() - t0) * 1000.0:.3f}"
        rec["status"] = sol.status
        rec["objective"] = "" if sol.x is None else repr(float(sol.objective))
        rec["nodes"] = sol.stats.get("nodes", sol.stats.get("evaluated", ""))
    except BigMValidityError as exc:
        rec["status"] = "bigm_invalid"
        rec["objective"] = repr(float(exc.mip_objective))
    except Exception as exc:  # recorded, never aborts the sweep
        rec["status"] = f"error:{type(exc).__name__}"
    return rec


def worker_count(default=None) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        return max(1, int(raw))
    return default or 1


def run_sweep(grid, reps: int, seed: int, method: str = "mip", bigm: str = "uniform",
              engine: str = "internal", node_limit: int = 100_000, workers: int | None = None,
              on_record=None) -> list:
    """Run every (row, rep) of ``grid``; records come back in grid order."""
    tasks = [(dims, rep, run_seed(seed, i, rep), method, bigm, engine, node_limit)
             for i, (_, dims) in enumerate(grid) for rep in range(reps)]
    workers = workers or worker_count()
    records = []
    if workers <= 1:
        for t in tasks:
            rec = run_one(t)
            records.append(rec)
            if on_record:
                on_record(rec)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rec in pool.map(run_one, tasks):
                records.append(rec)
                if on_record:
                    on_record(rec)
    return records


def summarize(grid, records, reps: int) -> list:
    out = []
    for i, (block, dims) in enumerate(grid):
        recs = records[i * reps:(i + 1) * reps]
        times = [float(r["solve_ms"]) for r in recs if r["solve_ms"] != ""]
        nodes = [float(r["nodes"]) for r in recs if r["nodes"] != ""]
        out.append({
            "block": block, **dims, "runs": len(recs),
            "optimal": sum(r["status"] == "optimal" for r in recs),
            "mean_solve_ms": f"{np.mean(times):.3f}" if times else "",
            "mean_nodes": f"{np.mean(nodes):.2f}" if nodes else "",
        })
    return out


def trend_report(summary) -> dict:
    """Per block, whether mean solve time is non-decreasing along the block."""
    out = {}
    for block in DIMS:
        rows = [r for r in summary if r["block"] == block and r["mean_solve_ms"] != ""]
        times = [float(r["mean_solve_ms"]) for r in rows]
        out[block] = {
            "values": [r[block] for r in rows],
            "mean_solve_ms": times,
            "non_decreasing": all(a <= b for a, b in zip(times, times[1:])),
        }
    return out


def to_csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r[k] for k in fields})
    return buf.getvalue()
