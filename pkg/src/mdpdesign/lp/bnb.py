"""LP-based branch-and-bound for :class:`MipModel`.

Nodes are explored best-first (lowest LP bound, ties by creation order) and
branching picks the most fractional integer variable, lowest index first.

Callers that know more about their model can pass ``priority`` columns, which
are branched on (even when the LP value is integral) until their bounds meet,
and a ``completion`` callback. At a node whose priority columns are all fixed
the callback proposes a full solution; when that solution satisfies every row
and bound, it is the best point of the node and the node is closed without
further branching. Otherwise the node is processed as usual.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time

import numpy as np

from .model import MipModel, SolveResult, Status
from .simplex import solve_lp

INT_TOL = 1e-6


def _most_fractional(x, int_idx):
    frac = x[int_idx] - np.floor(x[int_idx])
    dist = np.minimum(frac, 1.0 - frac)
    if dist.size == 0 or dist.max() <= INT_TOL:
        return -1
    # largest distance from integrality; argmax returns the lowest index on ties
    return int(int_idx[int(np.argmax(dist))])


def _split_fixed(lo, up, x, priority):
    """Branching column among ``priority`` whose bounds have not met yet."""
    open_ = priority[lo[priority] < up[priority]]
    if open_.size == 0:
        return -1, 0.0
    j = int(open_[0])
    v = min(max(math.floor(x[j] + 0.5), lo[j]), up[j])
    # children x_j <= v - 0.5 and x_j >= v - 0.5 unless v sits on the lower bound
    return j, (v + 0.5 if v <= lo[j] else v - 0.5)


def _acceptable(model, x, int_idx, tol):
    x = np.asarray(x, dtype=float)
    if x.shape != (model.lp.num_vars,) or not np.all(np.isfinite(x)):
        return False
    scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
    if np.any(np.abs(x[int_idx] - np.round(x[int_idx])) > INT_TOL):
        return False
    return model.lp.max_violation(x) <= tol * scale


def solve_mip(model: MipModel, *, node_limit: int = 1_000_000, lp_solver=None,
              gap_tol: float = 1e-9, priority=None, completion=None,
              completion_tol: float = 1e-7) -> SolveResult:
    """Globally optimal solution of ``model`` (finite integer bounds required).

    ``gap_tol`` is the relative tolerance under which a node bound is
    considered no better than the incumbent. ``priority`` and ``completion``
    are described in the module docstring; a proposal is accepted when its
    largest row or bound violation is at most ``completion_tol`` times
    ``1 + max|x|``.
    """
    lp_solver = lp_solver or solve_lp
    lp = model.lp
    sign = 1.0 if lp.sense == "min" else -1.0
    int_idx = np.flatnonzero(model.integer_mask)
    priority = np.asarray(priority if priority is not None else [], dtype=np.int64)
    if priority.size and not model.integer_mask[priority].all():
        raise ValueError("priority columns must be integer")
    lo0 = lp.lower.copy()
    up0 = lp.upper.copy()
    lo0[int_idx] = np.ceil(lo0[int_idx] - INT_TOL)
    up0[int_idx] = np.floor(up0[int_idx] + INT_TOL)
    if np.any(lo0 > up0):
        return SolveResult(Status.INFEASIBLE)

    t0 = time.perf_counter()
    counter = itertools.count()
    incumbent = None
    inc_val = math.inf  # internal minimisation value
    nodes = 0
    lp_iters = 0
    heap = [(-math.inf, next(counter), lo0, up0, False)]
    lp_failures = 0
    completions = 0
    rejected = 0

    def dominated(bound):
        return bound >= inc_val - gap_tol * max(1.0, abs(inc_val))

    while heap:
        bound, _, lo, up, tried = heapq.heappop(heap)
        if dominated(bound):
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, (bound, next(counter), lo, up, tried))
            break
        nodes += 1
        fixed = priority.size and np.all(lo[priority] == up[priority])
        if completion is not None and fixed and not tried:
            cand = completion(lo, up)
            if cand is not None and _acceptable(model, cand, int_idx, completion_tol):
                completions += 1
                val = sign * lp.evaluate(cand)
                if val < inc_val:
                    incumbent, inc_val = np.asarray(cand, dtype=float).copy(), val
                continue
            tried = True
        res = lp_solver(lp.with_bounds(lo, up))
        lp_iters += res.iterations
        if res.status is Status.UNBOUNDED and nodes == 1:
            return SolveResult(Status.UNBOUNDED, nodes=nodes, iterations=lp_iters)
        if res.status is Status.ITERATION_LIMIT:
            lp_failures += 1
        if res.status is not Status.OPTIMAL:
            continue
        val = sign * res.objective
        if dominated(val):
            continue
        j, cut = _split_fixed(lo, up, res.x, priority) if priority.size else (-1, 0.0)
        if j >= 0:
            down_up = up.copy()
            down_up[j] = math.floor(cut)
            up_lo = lo.copy()
            up_lo[j] = math.ceil(cut)
            heapq.heappush(heap, (val, next(counter), lo, down_up, tried))
            heapq.heappush(heap, (val, next(counter), up_lo, up, tried))
            continue
        j = _most_fractional(res.x, int_idx)
        if j < 0:
            x = res.x.copy()
            x[int_idx] = np.round(x[int_idx])
            if not _acceptable(model, x, int_idx, completion_tol):
                rejected += 1  # the LP engine reported a point that does not check out
                continue
            incumbent = x
            inc_val = sign * lp.evaluate(x)
            continue
        xj = res.x[j]
        down_up = up.copy()
        down_up[j] = math.floor(xj)
        up_lo = lo.copy()
        up_lo[j] = math.ceil(xj)
        heapq.heappush(heap, (val, next(counter), lo, down_up, tried))
        heapq.heappush(heap, (val, next(counter), up_lo, up, tried))

    stats = {"lp_iterations": lp_iters, "lp_failures": lp_failures, "completions": completions,
             "rejected_leaves": rejected,
             "seconds": time.perf_counter() - t0}
    if heap and any(not dominated(b) for b, *_ in heap):
        stats["best_bound"] = sign * min(b for b, *_ in heap)
        return SolveResult(Status.NODE_LIMIT, x=incumbent,
                           objective=sign * inc_val if incumbent is not None else float("nan"),
                           nodes=nodes, iterations=lp_iters, stats=stats)
    if incumbent is None:
        return SolveResult(Status.INFEASIBLE, nodes=nodes, iterations=lp_iters, stats=stats)
    return SolveResult(Status.OPTIMAL, x=incumbent, objective=lp.evaluate(incumbent),
                       nodes=nodes, iterations=lp_iters, stats=stats)
