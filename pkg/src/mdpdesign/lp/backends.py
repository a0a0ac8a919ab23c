"""Pluggable solver engines behind the ``solve_lp`` / ``solve_mip`` signatures.

``internal`` (the default) is the in-repo simplex and branch-and-bound.
``highs`` delegates to SciPy's HiGHS bindings and is meant for larger
benchmark runs and for cross-checking the internal engine.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bnb import solve_mip as _bnb_solve_mip
from .model import LpModel, MipModel, Relation, SolveResult, Status
from .simplex import solve_lp as _simplex_solve_lp


@dataclass
class SolverEngine:
    name: str
    solve_lp: object
    solve_mip: object


def _row_bounds(lp: LpModel):
    lo = np.full(lp.num_rows, -np.inf)
    hi = np.full(lp.num_rows, np.inf)
    for i, rel in enumerate(lp.relations):
        if rel is not Relation.GE:
            hi[i] = lp.rhs[i]
        if rel is not Relation.LE:
            lo[i] = lp.rhs[i]
    return lo, hi


def _highs(lp: LpModel, integrality, node_limit=None) -> SolveResult:
    from scipy.optimize import Bounds, LinearConstraint, milp

    sign = 1.0 if lp.sense == "min" else -1.0
    cons = []
    if lp.num_rows:
        lo, hi = _row_bounds(lp)
        cons.append(LinearConstraint(lp.A, lo, hi))
    options = {"presolve": True}
    if node_limit is not None:
        options["node_limit"] = int(node_limit)
    t0 = time.perf_counter()
    res = milp(sign * lp.objective, constraints=cons, integrality=integrality,
               bounds=Bounds(lp.lower, lp.upper), options=options)
    stats = {"seconds": time.perf_counter() - t0, "message": res.message}
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        mask = np.asarray(integrality) > 0
        x[mask] = np.round(x[mask])
        return SolveResult(Status.OPTIMAL, x=x, objective=lp.evaluate(x), nodes=nodes, stats=stats)
    # scipy reports some HiGHS limits (e.g. solution limit) as status 4
    status = {2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(res.status, Status.ITERATION_LIMIT)
    if status is Status.ITERATION_LIMIT and node_limit is not None:
        status = Status.NODE_LIMIT
    return SolveResult(status, nodes=nodes, stats=stats)


def _highs_lp(model: LpModel, **_) -> SolveResult:
    from scipy.optimize import linprog

    sign = 1.0 if model.sense == "min" else -1.0
    ub_rows = [i for i, r in enumerate(model.relations) if r is Relation.LE]
    lb_rows = [i for i, r in enumerate(model.relations) if r is Relation.GE]
    eq_rows = [i for i, r in enumerate(model.relations) if r is Relation.EQ]
    A_ub = np.vstack([model.A[ub_rows], -model.A[lb_rows]]) if ub_rows or lb_rows else None
    b_ub = np.concatenate([model.rhs[ub_rows], -model.rhs[lb_rows]]) if ub_rows or lb_rows else None
    res = linprog(sign * model.objective, A_ub=A_ub, b_ub=b_ub,
                  A_eq=model.A[eq_rows] if eq_rows else None,
                  b_eq=model.rhs[eq_rows] if eq_rows else None,
                  bounds=list(zip(model.lower, model.upper)), method="highs")
    if res.status != 0:
        status = {2: Status.INFEASIBLE, 3: Status.UNBOUNDED, 1: Status.ITERATION_LIMIT}.get(res.status, Status.INFEASIBLE)
        return SolveResult(status)
    dual = np.zeros(model.num_rows)
    if ub_rows or lb_rows:
        marg = sign * np.asarray(res.ineqlin.marginals)
        dual[ub_rows] = marg[: len(ub_rows)]
        dual[lb_rows] = -marg[len(ub_rows):]
    if eq_rows:
        dual[eq_rows] = sign * np.asarray(res.eqlin.marginals)
    x = np.asarray(res.x, dtype=float)
    return SolveResult(Status.OPTIMAL, x=x, objective=model.evaluate(x), dual=dual,
                       reduced_costs=model.objective - model.A.T @ dual, iterations=int(res.nit))


def _highs_mip(model: MipModel, *, node_limit: int | None = None, **_) -> SolveResult:
    integrality = np.array([0 if k == "continuous" else 1 for k in model.integrality])
    return _highs(model.lp, integrality, node_limit)


ENGINES = {
    "internal": SolverEngine("internal", _simplex_solve_lp, _bnb_solve_mip),
    "highs": SolverEngine("highs", _highs_lp, _highs_mip),
}


def get_engine(name: str = "internal") -> SolverEngine:
    try:
        return ENGINES[name]
    except KeyError:
        raise ValueError(f"unknown solver engine {name!r}; choose from {sorted(ENGINES)}") from None


def register_engine(engine: SolverEngine) -> None:
    ENGINES[engine.name] = engine
