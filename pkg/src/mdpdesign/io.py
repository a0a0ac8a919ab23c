"""Canonical JSON files for instances and solutions.

Instance layout (``version`` 1)::

    {"version": 1, "n1": ..., "n2": ...,
     "bounds": [[lower, upper], ...],          # null for an infinite bound
     "integrality": ["binary" | "integer" | "continuous", ...],
     "constraints": [{"coeffs": [...], "rel": "<=" | "=" | ">=", "rhs": ...}, ...],
     "design_cost": [...],
     "scenarios": [{"probability", "discount", "num_states", "num_actions",
                    "transition": [s][a][s'], "cost_f": [s][a][n], "cost_g": [s][a],
                    "initial_dist": [s]}, ...]}

Floats are written with ``repr`` precision so a write/read cycle is exact,
and the output for a given instance is byte-for-byte stable.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .design import (
    DesignMdpInstance, DesignSpace, IntegratedSolution, check_design_feasible, design_violations,
    objective_at,
)
from .lp.model import CONTINUOUS, VAR_KINDS, Relation
from .mdp import InvalidModelError, ScenarioMdp, mdp_violations

SCHEMA_VERSION = 1
SOLUTION_KIND = "solution"


class SchemaError(InvalidModelError):
    """A file does not follow the canonical schema or breaks a model invariant."""


def _bound(v):
    return None if math.isinf(v) else float(v)


def instance_to_dict(inst: DesignMdpInstance) -> dict:
    d = inst.design
    return {
        "version": SCHEMA_VERSION,
        "n1": d.n1,
        "n2": d.n2,
        "bounds": [[_bound(lo), _bound(up)] for lo, up in zip(d.lower, d.upper)],
        "integrality": list(d.integrality),
        "constraints": [{"coeffs": row.tolist(), "rel": rel.value, "rhs": float(rhs)}
                        for row, rel, rhs in d.constraints],
        "design_cost": inst.design_cost.tolist(),
        "scenarios": [
            {
                "probability": sc.probability,
                "discount": sc.discount,
                "num_states": sc.num_states,
                "num_actions": sc.num_actions,
                "transition": sc.transition.tolist(),
                "cost_f": sc.cost_f.tolist(),
                "cost_g": sc.cost_g.tolist(),
                "initial_dist": sc.initial_dist.tolist(),
            }
            for sc in inst.scenarios
        ],
    }


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n"


def _array(value, shape_desc, where, out, ndim):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        out.append(f"{where}: expected a numeric array {shape_desc}")
        return None
    if arr.ndim != ndim and not (arr.size == 0 and ndim > 1):
        out.append(f"{where}: expected a numeric array {shape_desc}, got {arr.ndim} dimension(s)")
        return None
    return arr


def _number(value, where, out):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        out.append(f"{where}: expected a number")
        return None
    return float(value)


def instance_violations(data) -> list:
    """Every schema and invariant problem of an instance dictionary."""
    out = []
    if not isinstance(data, dict):
        return ["instance file must hold a JSON object"]
    required = ("version", "n1", "n2", "bounds", "integrality", "constraints", "design_cost", "scenarios")
    missing = [k for k in required if k not in data]
    if missing:
        return [f"missing field(s): {', '.join(missing)}"]
    if data["version"] != SCHEMA_VERSION:
        out.append(f"version: unsupported schema version {data['version']!r}")

    kinds = data["integrality"]
    bounds = data["bounds"]
    if not isinstance(kinds, list) or not all(k in VAR_KINDS for k in kinds):
        out.append(f"integrality: entries must be one of {list(VAR_KINDS)}")
        return out
    n = len(kinds)
    n1 = sum(k == CONTINUOUS for k in kinds)
    if data["n1"] != n1 or data["n2"] != n - n1:
        out.append(f"n1/n2: declared {data['n1']}/{data['n2']} but integrality lists {n1}/{n - n1}")
    if not isinstance(bounds, list) or len(bounds) != n or not all(
            isinstance(b, list) and len(b) == 2 for b in bounds):
        out.append(f"bounds: expected {n} [lower, upper] pairs")
        return out
    lower = np.array([-math.inf if b[0] is None else b[0] for b in bounds], dtype=float)
    upper = np.array([math.inf if b[1] is None else b[1] for b in bounds], dtype=float)

    rows, rels, rhs = [], [], []
    for i, c in enumerate(data["constraints"]):
        where = f"constraints[{i}]"
        if not isinstance(c, dict) or set(c) != {"coeffs", "rel", "rhs"}:
            out.append(f"{where}: expected an object with coeffs, rel and rhs")
            continue
        try:
            rels.append(Relation.parse(c["rel"]))
        except ValueError:
            out.append(f"{where}.rel: unknown relation {c['rel']!r}")
            continue
        coeffs = _array(c["coeffs"], f"of length {n}", f"{where}.coeffs", out, 1)
        r = _number(c["rhs"], f"{where}.rhs", out)
        if coeffs is None or r is None:
            rels.pop()
            continue
        if coeffs.shape[0] != n:
            out.append(f"{where}.coeffs: length {coeffs.shape[0]}, expected {n}")
            rels.pop()
            continue
        rows.append(coeffs)
        rhs.append(r)
    A = np.array(rows).reshape(len(rows), n)
    out += design_violations(lower, upper, kinds, A, rels, rhs)

    cost = _array(data["design_cost"], f"of length {n}", "design_cost", out, 1)
    if cost is not None and cost.shape[0] != n:
        out.append(f"design_cost: length {cost.shape[0]}, expected {n}")

    scen = data["scenarios"]
    if not isinstance(scen, list) or not scen:
        out.append("scenarios: at least one scenario is required")
        return out
    q_total = 0.0
    for k, sc in enumerate(scen):
        where = f"scenarios[{k}]"
        keys = ("probability", "discount", "num_states", "num_actions", "transition", "cost_f", "cost_g",
                "initial_dist")
        if not isinstance(sc, dict) or any(key not in sc for key in keys):
            out.append(f"{where}: missing field(s)")
            continue
        q = _number(sc["probability"], f"{where}.probability", out)
        lam = _number(sc["discount"], f"{where}.discount", out)
        P = _array(sc["transition"], "[s][a][s']", f"{where}.transition", out, 3)
        F = _array(sc["cost_f"], "[s][a][n]", f"{where}.cost_f", out, 3)
        G = _array(sc["cost_g"], "[s][a]", f"{where}.cost_g", out, 2)
        alpha = _array(sc["initial_dist"], "[s]", f"{where}.initial_dist", out, 1)
        if any(v is None for v in (q, lam, P, F, G, alpha)):
            continue
        q_total += q
        if P.shape[:2] != (sc["num_states"], sc["num_actions"]):
            out.append(f"{where}: transition shape {P.shape} disagrees with num_states={sc['num_states']}, "
                       f"num_actions={sc['num_actions']}")
        out += [f"{where}: {msg}" for msg in mdp_violations(P, F, G, alpha, lam, q, n)]
    if abs(q_total - 1.0) > 1e-9:
        out.append(f"scenarios: probabilities sum to {q_total!r}, not 1")
    return out


def instance_from_dict(data) -> DesignMdpInstance:
    problems = instance_violations(data)
    if problems:
        raise SchemaError(problems)
    lower = [-math.inf if b[0] is None else b[0] for b in data["bounds"]]
    upper = [math.inf if b[1] is None else b[1] for b in data["bounds"]]
    n = len(lower)
    cons = data["constraints"]
    space = DesignSpace(lower, upper, data["integrality"],
                        np.array([c["coeffs"] for c in cons], dtype=float).reshape(len(cons), n),
                        [c["rel"] for c in cons], [c["rhs"] for c in cons])
    scenarios = [
        ScenarioMdp(np.array(sc["transition"], dtype=float),
                    np.array(sc["cost_f"], dtype=float).reshape(sc["num_states"], sc["num_actions"], n),
                    np.array(sc["cost_g"], dtype=float), sc["initial_dist"], sc["discount"], sc["probability"])
        for sc in data["scenarios"]
    ]
    return DesignMdpInstance(space, data["design_cost"], scenarios)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_text(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def save_instance(inst: DesignMdpInstance, path) -> None:
    write_text(path, dumps(instance_to_dict(inst)))


def load_instance(path) -> DesignMdpInstance:
    return instance_from_dict(read_json(path))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    return str(v)


def solution_to_dict(sol: IntegratedSolution, instance_path=None) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "kind": SOLUTION_KIND,
        "instance": None if instance_path is None else str(instance_path),
        "status": sol.status,
        "method": sol.method,
        "x": None if sol.x is None else [float(v) for v in sol.x],
        "objective": _jsonable(sol.objective),
        "per_scenario": [{"u": ps.u, "values": ps.values.tolist(), "rule": [int(a) for a in ps.rule]}
                         for ps in sol.per_scenario],
        "stats": _jsonable(sol.stats),
    }


def is_solution(data) -> bool:
    return isinstance(data, dict) and data.get("kind") == SOLUTION_KIND


def solution_violations(data, inst: DesignMdpInstance, tol: float = 1e-6) -> list:
    """Schema checks plus a re-solve at the reported design."""
    out = []
    for key in ("version", "status", "x", "objective", "per_scenario"):
        if key not in data:
            out.append(f"missing field: {key}")
    if out:
        return out
    if data["status"] != "optimal":
        if data["x"] is not None:
            out.append(f"status {data['status']!r} but a design is reported")
        return out
    x = np.asarray(data["x"], dtype=float)
    if x.shape != (inst.design.n,):
        return [f"x: length {x.size}, expected {inst.design.n}"]
    if not check_design_feasible(inst.design, x):
        return ["x: design violates its bounds, integrality or constraint rows"]
    obj, per = objective_at(inst, x)
    claimed = data["objective"]
    if not isinstance(claimed, (int, float)) or not abs(claimed - obj) <= tol * max(1.0, abs(obj)):
        out.append(f"objective: reported {claimed!r} but re-solving gives {obj!r}")
    if len(data["per_scenario"]) != len(per):
        out.append(f"per_scenario: {len(data['per_scenario'])} entries, expected {len(per)}")
    else:
        for k, (rep, ps) in enumerate(zip(data["per_scenario"], per)):
            u = rep.get("u") if isinstance(rep, dict) else None
            if not isinstance(u, (int, float)) or not abs(u - ps.u) <= tol * max(1.0, abs(ps.u)):
                out.append(f"per_scenario[{k}].u: reported {u!r} but re-solving gives {ps.u!r}")
    return out
