"""Brute-force baseline: score every feasible design by solving all scenario MDPs."""

from __future__ import annotations

import itertools
import time

import numpy as np

from .design import FEAS_TOL, DesignMdpInstance, DesignSpace, IntegratedSolution, objective_at
from .lp.model import Relation

DEFAULT_CAP = 1_000_000


class UnsupportedDesignError(ValueError):
    pass


class EnumerationSizeError(ValueError):
    pass


def box_size(space: DesignSpace) -> int:
    return int(np.prod([int(u) - int(l) + 1 for l, u in zip(space.lower, space.upper)], dtype=object))


def _feasible_rows(space: DesignSpace, pts: np.ndarray, tol: float) -> np.ndarray:
    ok = np.ones(pts.shape[0], dtype=bool)
    if space.m:
        act = pts @ space.A.T - space.rhs
        for i, rel in enumerate(space.relations):
            if rel is Relation.LE:
                ok &= act[:, i] <= tol
            elif rel is Relation.GE:
                ok &= act[:, i] >= -tol
            else:
                ok &= np.abs(act[:, i]) <= tol
    return ok


def enumerate_designs(space: DesignSpace, cap: int | None = DEFAULT_CAP, tol: float = FEAS_TOL,
                      chunk: int = 4096):
    """Yield every feasible integer design in lexicographic order."""
    if space.n1:
        raise UnsupportedDesignError(
            f"enumeration needs an all-integer design; found {space.n1} continuous variable(s)")
    size = box_size(space)
    if cap is not None and size > cap:
        raise EnumerationSizeError(f"design box has {size} points, above the cap of {cap}")
    lo = np.ceil(space.lower - tol).astype(int)
    up = np.floor(space.upper + tol).astype(int)
    ranges = [range(l, u + 1) for l, u in zip(lo, up)]
    it = itertools.product(*ranges)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        pts = np.array(block, dtype=float).reshape(len(block), space.n)
        for p in pts[_feasible_rows(space, pts, tol)]:
            yield p


def brute_force_solve(instance: DesignMdpInstance, cap: int | None = DEFAULT_CAP) -> IntegratedSolution:
    """Argmin of :func:`objective_at` over all feasible designs.

    Ties (within 1e-12 relative) keep the lexicographically smallest design.
    """
    t0 = time.perf_counter()
    best = None
    evaluated = 0
    for x in enumerate_designs(instance.design, cap):
        obj, per = objective_at(instance, x)
        evaluated += 1
        if best is None or obj < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best = (obj, x, per)
    stats = {"evaluated": evaluated, "solve_seconds": time.perf_counter() - t0}
    if best is None:
        return IntegratedSolution("infeasible", None, float("nan"), [], "enumeration", stats)
    obj, x, per = best
    return IntegratedSolution("optimal", x, obj, per, "enumeration", stats)
