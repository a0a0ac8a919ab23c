"""Dense two-phase primal simplex on a full tableau.

Pricing is Dantzig's most-negative reduced cost; after ``degeneracy_streak``
consecutive degenerate pivots the solver switches to Bland's rule until the
next pivot that makes progress, which rules out cycling.

Outside Bland mode the ratio test tolerates primal infeasibility up to
``FEAS_TOL`` in exchange for a larger pivot. The entering column is checked
against the original rows before every pivot, and the basic solution every
``CHECK_EVERY`` pivots; when roundoff shows up the tableau is rebuilt from
the original columns and the current basis.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from .model import LpModel, Relation, SolveResult, Status

PIVOT_TOL = 1e-9
DEGENERATE_STEP = 1e-12
FEAS_TOL = 1e-9
PHASE1_TOL = 1e-8
CHECK_EVERY = 50
DRIFT_TOL = 1e-9


class _StandardForm:
    """min c'x' s.t. A'x' = b' (b' >= 0), x' >= 0, plus the map back to x."""

    def __init__(self, model: LpModel):
        n = model.num_vars
        lo, up = model.lower, model.upper
        sign = 1.0 if model.sense == "min" else -1.0
        c = sign * model.objective

        x0 = np.zeros(n)
        cols = []  # (original index, +1/-1)
        bound_rows = []  # (std column, upper limit)
        for j in range(n):
            l, u = lo[j], up[j]
            if np.isfinite(l) and l == u:
                x0[j] = l
            elif np.isfinite(l):
                x0[j] = l
                cols.append((j, 1.0))
                if np.isfinite(u):
                    bound_rows.append((len(cols) - 1, u - l))
            elif np.isfinite(u):
                x0[j] = u
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        ns = len(cols)
        D = np.zeros((n, ns))
        for k, (j, s) in enumerate(cols):
            D[j, k] = s

        m0 = model.num_rows
        A_rows = model.A @ D if m0 else np.zeros((0, ns))
        b_rows = model.rhs - model.A @ x0 if m0 else np.zeros(0)
        A_b = np.zeros((len(bound_rows), ns))
        b_b = np.zeros(len(bound_rows))
        for i, (k, lim) in enumerate(bound_rows):
            A_b[i, k] = 1.0
            b_b[i] = lim

        A = np.vstack([A_rows, A_b])
        b = np.concatenate([b_rows, b_b])
        rels = list(model.relations) + [Relation.LE] * len(bound_rows)

        flip = b < 0
        A[flip] *= -1.0
        b[flip] *= -1.0
        rels = [_swap(r) if f else r for r, f in zip(rels, flip)]

        m = A.shape[0]
        n_slack = sum(r is not Relation.EQ for r in rels)
        n_art = sum(r is not Relation.LE for r in rels)
        full = np.zeros((m, ns + n_slack + n_art))
        full[:, :ns] = A
        basis = np.empty(m, dtype=np.int64)
        init_col = np.empty(m, dtype=np.int64)
        ks, ka = ns, ns + n_slack
        for i, r in enumerate(rels):
            if r is Relation.LE:
                full[i, ks] = 1.0
                basis[i] = ks
                ks += 1
            elif r is Relation.GE:
                full[i, ks] = -1.0
                ks += 1
                full[i, ka] = 1.0
                basis[i] = ka
                ka += 1
            else:
                full[i, ka] = 1.0
                basis[i] = ka
                ka += 1
            init_col[i] = basis[i]

        self.model = model
        self.sense_sign = sign
        self.m_orig = m0
        self.m = m
        self.ns = ns
        self.n_struct = ns + n_slack
        self.n_cols = full.shape[1]
        self.full = full
        self.b = b
        self.row_sign = np.where(flip, -1.0, 1.0)
        self.basis0 = basis
        self.init_col = init_col
        self.cost = np.concatenate([c @ D, np.zeros(n_slack + n_art)])
        self.D = D
        self.x0 = x0

    def to_original(self, xs: np.ndarray) -> np.ndarray:
        return self.x0 + self.D @ xs[: self.ns]


def _swap(rel: Relation) -> Relation:
    if rel is Relation.LE:
        return Relation.GE
    if rel is Relation.GE:
        return Relation.LE
    return rel


class _Basis:
    """Ties a tableau to the original rows so it can be checked and rebuilt."""

    def __init__(self, T, basis, full, b, cost):
        self.T, self.basis, self.full, self.b, self.cost = T, basis, full, b, cost
        self.B = np.array(full[:, basis])
        self.rebuilds = 0

    def replace(self, r, c):
        self.B[:, r] = self.full[:, c]

    def rebuild(self) -> bool:
        """Recompute ``T`` as B^-1 [A | b] with the matching reduced-cost row."""
        T, basis, full, cost = self.T, self.basis, self.full, self.cost
        m = basis.size
        try:
            sol = np.linalg.solve(self.B, np.column_stack([full, self.b]))
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(sol)):
            return False
        sol[np.abs(sol) < 1e-13] = 0.0
        sol[:, basis] = np.eye(m)
        T[:m] = sol
        T[m, :-1] = cost
        T[m, -1] = 0.0
        T[m] -= cost[basis] @ sol
        T[m, basis] = 0.0
        self.rebuilds += 1
        return True

    def column_drifted(self, c) -> bool:
        """Whether tableau column ``c`` no longer reproduces the original column."""
        m = self.basis.size
        a = self.full[:, c]
        err = np.max(np.abs(self.B @ self.T[:m, c] - a), initial=0.0)
        return err > DRIFT_TOL * (1.0 + float(np.max(np.abs(self.T[:m, c]), initial=0.0)))

    def rhs_drifted(self) -> bool:
        m = self.basis.size
        err = np.max(np.abs(self.B @ self.T[:m, -1] - self.b), initial=0.0)
        return err > DRIFT_TOL * (1.0 + float(np.max(np.abs(self.b), initial=0.0)))


def _iterate(T, basis, m, n_allowed, opt_tol, max_iter, used, degeneracy_streak, guard=None):
    """Pivot until optimal. Returns (status, iterations spent)."""
    streak = 0
    it = 0
    since = 0
    checked = False
    while True:
        if guard is not None and since >= CHECK_EVERY:
            if guard.rhs_drifted() or T[:m, -1].min() < -1e3 * FEAS_TOL:
                guard.rebuild()
            since = 0
        d = T[m, :n_allowed]
        bland = streak >= degeneracy_streak
        if bland:
            neg = np.flatnonzero(d < -opt_tol)
            if neg.size == 0:
                return Status.OPTIMAL, it
            c = int(neg[0])
        else:
            c = int(np.argmin(d)) if n_allowed else 0
            if n_allowed == 0 or d[c] >= -opt_tol:
                return Status.OPTIMAL, it
        if used + it >= max_iter:
            return Status.ITERATION_LIMIT, it
        if guard is not None and not checked and guard.column_drifted(c):
            checked = True  # price again on the rebuilt tableau
            if guard.rebuild():
                continue
        checked = False
        col_scale = max(1.0, float(np.max(np.abs(T[:m, c]), initial=0.0)))
        r = kernels.ratio_test(T, c, basis, m, PIVOT_TOL * col_scale, bland, 0.0 if bland else FEAS_TOL)
        if r < 0:
            return Status.UNBOUNDED, it
        step = max(T[r, -1], 0.0) / T[r, c]
        streak = streak + 1 if step <= DEGENERATE_STEP else 0
        kernels.pivot(T, r, c)
        basis[r] = c
        if guard is not None:
            guard.replace(r, c)
        it += 1
        since += 1
        if guard is not None and T[:m, -1].min() < -1e3 * FEAS_TOL:
            since = CHECK_EVERY


def solve_lp(model: LpModel, *, max_iter: int | None = None, degeneracy_streak: int = 20) -> SolveResult:
    """Solve ``model`` to optimality with the two-phase tableau simplex.

    Dual values are sensitivities of the optimal objective to each row's
    right-hand side, so for a max-sense model with ``<=`` rows they are
    nonnegative and ``sum(dual * rhs)`` is the dual objective.
    """
    if max_iter is None:
        max_iter = max(100, 100 * (model.num_rows + model.num_vars))
    sf = _StandardForm(model)
    m, ncol = sf.m, sf.n_cols
    cmax = float(np.max(np.abs(sf.cost), initial=0.0))
    opt_tol = max(1e-9, 1e-13 * cmax)

    T = np.zeros((m + 1, ncol + 1))
    T[:m, :ncol] = sf.full
    T[:m, -1] = sf.b
    basis = sf.basis0.copy()
    rows_alive = np.arange(m)
    iters = 0

    art = basis >= sf.n_struct
    if art.any():
        # phase 1: minimise the sum of artificials
        cost1 = np.zeros(ncol)
        cost1[sf.n_struct:] = 1.0
        T[m, :ncol] = cost1
        T[m] -= T[:m][art].sum(axis=0)

        guard1 = _Basis(T, basis, sf.full, sf.b, cost1)
        status, k = _iterate(T, basis, m, ncol, 1e-10, max_iter, iters, degeneracy_streak, guard1)
        iters += k
        if status is Status.ITERATION_LIMIT:
            return SolveResult(Status.ITERATION_LIMIT, iterations=iters)
        if k:
            guard1.rebuild()
        # each leftover artificial is judged against the scale of its own row
        infeas = -T[m, -1]
        row_of = {int(c): i for i, c in enumerate(sf.init_col)}
        scale = np.maximum(np.abs(sf.b), np.max(np.abs(sf.full[:, : sf.n_struct]), axis=1, initial=0.0))
        scale = np.maximum(scale, 1.0)
        bad = any(T[r, -1] > PHASE1_TOL * scale[row_of[int(basis[r])]]
                  for r in range(m) if basis[r] >= sf.n_struct)
        if bad or infeas > PHASE1_TOL * float(scale.sum()):
            return SolveResult(Status.INFEASIBLE, iterations=iters, stats={"phase1_residual": infeas})

        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] < sf.n_struct:
                continue
            row = np.abs(T[i, : sf.n_struct])
            j = int(np.argmax(row)) if sf.n_struct else 0
            if sf.n_struct and row[j] > PIVOT_TOL:
                kernels.pivot(T, i, j)
                basis[i] = j
            else:
                keep[i] = False  # redundant row
        if not keep.all():
            T = np.ascontiguousarray(np.vstack([T[:m][keep], T[m:]]))
            basis = np.ascontiguousarray(basis[keep])
            rows_alive = rows_alive[keep]
            m = int(keep.sum())

    # phase 2
    cost = sf.cost
    T[m, :] = 0.0
    T[m, :ncol] = cost
    T[m] -= cost[basis] @ T[:m]
    full_alive, b_alive = sf.full[rows_alive], sf.b[rows_alive]

    guard2 = _Basis(T, basis, full_alive, b_alive, cost)
    status, k = _iterate(T, basis, m, sf.n_struct, opt_tol, max_iter, iters, degeneracy_streak, guard2)
    iters += k
    if status is not Status.OPTIMAL:
        return SolveResult(status, iterations=iters)

    B = sf.full[rows_alive][:, basis]
    try:
        xb = np.linalg.solve(B, sf.b[rows_alive])
        y_alive = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:
        xb = T[:m, -1].copy()
        y_alive = -T[m, sf.init_col[rows_alive]]
    xs = np.zeros(ncol)
    xs[basis] = np.maximum(xb, 0.0)
    x = sf.to_original(xs)
    # clean up roundoff against the bounds
    x = np.clip(x, model.lower, model.upper)

    y_std = np.zeros(sf.m)
    y_std[rows_alive] = y_alive
    dual = sf.sense_sign * sf.row_sign[: sf.m_orig] * y_std[: sf.m_orig]
    rc = model.objective - (model.A.T @ dual if model.num_rows else 0.0)
    return SolveResult(
        Status.OPTIMAL,
        x=x,
        objective=model.evaluate(x),
        dual=dual,
        reduced_costs=rc,
        iterations=iters,
    )
