"""Single-level big-M MIP for the design problem.

Each scenario's follower LP is replaced by primal feasibility, dual
(occupancy) feasibility and complementary slackness, the latter linearised
with binaries ``delta``:

    gamma[s,a]  <= M[s] delta[s,a]
    slack[s,a]  <= M'[s] (1 - delta[s,a])

The MIP's ``v`` columns are never reported directly: the returned solution
re-solves every scenario MDP at the MIP design and checks that the objective
matches, which catches big-M values that cut off the true optimum.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .design import DesignMdpInstance, InfeasibleDesignError, IntegratedSolution, objective_at
from .lp.backends import get_engine
from .lp.lpformat import to_lp_text
from .lp.model import BINARY, CONTINUOUS, LpModel, MipModel, Relation, Status
from .lp.simplex import solve_lp
from .mdp import policy_iteration

UNIFORM = "uniform"
PER_STATE_LP = "per_state_lp"
SCHEMES = (UNIFORM, PER_STATE_LP)


class BigMError(ValueError):
    """The design box does not bound the costs, so no finite big-M exists."""


class BigMValidityError(RuntimeError):
    """Re-solving the MDPs at the MIP design disagrees with the MIP objective."""

    def __init__(self, mip_objective, rederived, x=None):
        self.mip_objective = mip_objective
        self.rederived = rederived
        self.x = x
        super().__init__(
            f"big-M too small: MIP objective {mip_objective!r} but re-solved objective {rederived!r}")


@dataclass
class BigMScheme:
    """Per-scenario, per-state big-M pairs: ``M[k][s]`` bounds the occupancy
    variables and ``M_prime[k][s]`` the Bellman slacks of state ``s``."""

    kind: str
    M: list
    M_prime: list

    def values(self, k: int):
        return self.M[k], self.M_prime[k]


def _coupled_box(instance):
    """Design bounds with uncoupled variables pinned to 0 (they never move a cost)."""
    lower, upper = instance.design.lower, instance.design.upper
    coupled = np.zeros(instance.design.n, dtype=bool)
    for sc in instance.scenarios:
        coupled |= np.any(sc.cost_f != 0, axis=(0, 1))
    for j in np.flatnonzero(coupled):
        if not (np.isfinite(lower[j]) and np.isfinite(upper[j])):
            raise BigMError(f"design variable {j} has an unbounded range but enters the MDP costs")
    return np.where(coupled, lower, 0.0), np.where(coupled, upper, 0.0)


def _cost_extremes(sc, lo, hi):
    """Per-pair (min, max) of ``f'x + g`` over the box, by interval arithmetic."""
    F = sc.cost_f
    a, b = F * lo, F * hi
    return sc.cost_g + np.minimum(a, b).sum(axis=2), sc.cost_g + np.maximum(a, b).sum(axis=2)


def _reachable(P: np.ndarray) -> np.ndarray:
    """Boolean (S, S): state j reachable from i under some action sequence."""
    S = P.shape[0]
    R = (P.max(axis=1) > 0) | np.eye(S, dtype=bool)
    while True:
        nxt = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
        if np.array_equal(nxt, R):
            return R
        R = nxt


def _max_pair_spread(F, G, lower, upper):
    """``max_x max_{i,j} (c_i(x) - c_j(x))`` over the box for pair rows F, G."""
    best = 0.0
    for i in range(F.shape[0]):
        d = F[i] - F
        spread = np.maximum(d * lower, d * upper).sum(axis=1) + (G[i] - G)
        best = max(best, float(spread.max()))
    return best


def compute_big_m(instance: DesignMdpInstance, kind: str = UNIFORM) -> BigMScheme:
    """Big-M parameters by one of two schemes.

    ``uniform``: ``M = 1/(1-lam)`` and ``M' = t/(1-lam)`` per scenario, with
    ``t`` the largest cost over the design box less the most negative one
    (floored at 1).

    ``per_state_lp``: ``M = 1/(1-lam)`` and, for each state, ``M'`` is the
    largest cost spread among state-action pairs reachable from that state,
    each spread maximised over the design box, divided by ``1-lam``.
    """
    kind = kind.replace("-", "_")
    if kind not in SCHEMES:
        raise ValueError(f"unknown big-M scheme {kind!r}")
    lower, upper = _coupled_box(instance)
    Ms, Mps = [], []
    for sc in instance.scenarios:
        S, A = sc.num_states, sc.num_actions
        scale = 1.0 / (1.0 - sc.discount)
        cmin, cmax = _cost_extremes(sc, lower, upper)
        Ms.append(np.full(S, scale))
        if kind == UNIFORM:
            t = max(1.0, float(cmax.max()) - min(0.0, float(cmin.min())))
            Mps.append(np.full(S, t * scale))
            continue
        R = _reachable(sc.transition)
        Mp = np.empty(S)
        cache = {}
        for s in range(S):
            key = R[s].tobytes()
            if key not in cache:
                states = np.flatnonzero(R[s])
                F = sc.cost_f[states].reshape(len(states) * A, -1)
                G = sc.cost_g[states].reshape(-1)
                cache[key] = _max_pair_spread(F, G, lower, upper)
            Mp[s] = max(1.0, cache[key]) * scale
        Mps.append(Mp)
    return BigMScheme(kind, Ms, Mps)


@dataclass
class ReformulatedMip:
    model: MipModel
    x_cols: np.ndarray
    v_cols: list
    gamma_cols: list
    delta_cols: list
    primal_rows: list = field(default_factory=list)

    @property
    def index_map(self) -> dict:
        out = {("x", j): int(c) for j, c in enumerate(self.x_cols)}
        for k, (vc, gc, dc) in enumerate(zip(self.v_cols, self.gamma_cols, self.delta_cols)):
            for s, c in enumerate(vc):
                out[("v", k, s)] = int(c)
            for (s, a), c in np.ndenumerate(gc):
                out[("gamma", k, s, a)] = int(c)
            for (s, a), c in np.ndenumerate(dc):
                out[("delta", k, s, a)] = int(c)
        return out


def build_single_level_mip(instance: DesignMdpInstance, scheme: BigMScheme) -> ReformulatedMip:
    design = instance.design
    n = design.n
    scen = instance.scenarios
    n_cols = n + sum(sc.num_states + 2 * sc.num_states * sc.num_actions for sc in scen)
    n_rows = design.m + sum(3 * sc.num_states * sc.num_actions + sc.num_states for sc in scen)

    A = np.zeros((n_rows, n_cols))
    rhs = np.zeros(n_rows)
    rel = [Relation.LE] * n_rows
    c = np.zeros(n_cols)
    lower = np.zeros(n_cols)
    upper = np.full(n_cols, np.inf)
    kinds = [CONTINUOUS] * n_cols
    names = [f"x[{j}]" for j in range(n)] + [""] * (n_cols - n)

    x_cols = np.arange(n)
    c[:n] = instance.design_cost
    lower[:n] = design.lower
    upper[:n] = design.upper
    kinds[:n] = design.integrality
    A[: design.m, :n] = design.A
    rhs[: design.m] = design.rhs
    rel[: design.m] = design.relations

    col, row = n, design.m
    v_cols, g_cols, d_cols, p_rows = [], [], [], []
    for k, sc in enumerate(scen):
        S, A_k = sc.num_states, sc.num_actions
        SA = S * A_k
        lam = sc.discount
        M, Mp = scheme.values(k)
        vc = np.arange(col, col + S)
        gc = np.arange(col + S, col + S + SA)
        dc = np.arange(col + S + SA, col + S + 2 * SA)
        col += S + 2 * SA
        v_cols.append(vc)
        g_cols.append(gc.reshape(S, A_k))
        d_cols.append(dc.reshape(S, A_k))

        lower[vc] = -np.inf
        upper[dc] = 1.0
        for i in dc:
            kinds[i] = BINARY
        for s in range(S):
            names[vc[s]] = f"v[{k},{s}]"
            for a in range(A_k):
                names[gc[s * A_k + a]] = f"gamma[{k},{s},{a}]"
                names[dc[s * A_k + a]] = f"delta[{k},{s},{a}]"
        c[vc] = sc.probability * sc.initial_dist

        bellman = np.repeat(np.eye(S), A_k, axis=0) - lam * sc.transition.reshape(SA, S)
        F = sc.cost_f.reshape(SA, n)
        G = sc.cost_g.reshape(SA)
        M_pair = np.repeat(M, A_k)
        Mp_pair = np.repeat(Mp, A_k)

        # primal feasibility: v_s - lam P v - f'x <= g
        r = np.arange(row, row + SA)
        p_rows.append(r)
        A[np.ix_(r, vc)] = bellman
        A[np.ix_(r, x_cols)] = -F
        rhs[r] = G
        row += SA

        # dual balance: sum_a gamma[s,a] - lam sum_{j,a} gamma[j,a] p(s|j,a) = q alpha_s
        r = np.arange(row, row + S)
        A[np.ix_(r, gc)] = bellman.T
        rhs[r] = sc.probability * sc.initial_dist
        for i in r:
            rel[i] = Relation.EQ
        row += S

        # activation: gamma <= M delta
        r = np.arange(row, row + SA)
        A[r, gc] = 1.0
        A[r, dc] = -M_pair
        row += SA

        # slack: f'x + g - v_s + lam P v <= M' (1 - delta)
        r = np.arange(row, row + SA)
        A[np.ix_(r, vc)] = -bellman
        A[np.ix_(r, x_cols)] = F
        A[r, dc] = Mp_pair
        rhs[r] = Mp_pair - G
        row += SA

    lp = LpModel("min", c, A, rel, rhs, lower, upper, names)
    return ReformulatedMip(MipModel(lp, kinds), x_cols, v_cols, g_cols, d_cols, p_rows)


def extract_policy_from_duals(mip_x, rm: ReformulatedMip, k: int, fallback=None) -> np.ndarray:
    """Per state, the action carrying the most occupancy ``gamma[s, a]``.

    States whose occupancy row is numerically zero take the action from
    ``fallback`` (or action 0 when no fallback is given).
    """
    gamma = np.asarray(mip_x)[rm.gamma_cols[k]]
    rule = gamma.argmax(axis=1).astype(np.int64)
    empty = gamma.max(axis=1) <= 1e-9
    if empty.any():
        rule[empty] = 0 if fallback is None else np.asarray(fallback)[empty]
    return rule


def complementarity_products(instance: DesignMdpInstance, rm: ReformulatedMip, mip_x, scheme: BigMScheme):
    """Per scenario, ``gamma * slack / (M M')`` for every state-action pair."""
    mip_x = np.asarray(mip_x)
    x = mip_x[rm.x_cols]
    out = []
    for k, sc in enumerate(instance.scenarios):
        v = mip_x[rm.v_cols[k]]
        slack = sc.costs_at(x) + sc.discount * (sc.transition @ v) - v[:, None]
        gamma = mip_x[rm.gamma_cols[k]]
        M, Mp = scheme.values(k)
        out.append(gamma * slack / (M * Mp)[:, None])
    return out


def mdp_completion(instance: DesignMdpInstance, rm: ReformulatedMip):
    """Completion callback for branch-and-bound once the design is fixed.

    At a fixed design, feasibility of the MIP forces every ``v`` block to be
    the optimal value function, so all MIP points with that design share one
    objective. The callback builds such a point from policy iteration:
    ``v`` the optimal values, ``gamma`` the occupancy of the optimal rule and
    ``delta`` its indicator. Branch-and-bound still checks the point against
    every row, so a big-M too small for this design rejects it. Returns
    ``None`` (plain branching) when a continuous design column enters the
    MDP costs, because then the design is not pinned by the integer columns.
    """
    design = instance.design
    cont = np.flatnonzero(~design.integer_mask)
    coupled = [j for j in cont if any(np.any(sc.cost_f[:, :, j] != 0) for sc in instance.scenarios)]
    int_cols = rm.x_cols[design.integer_mask]
    n_cols = rm.model.lp.num_vars

    def complete(lo, up):
        if coupled:
            return None
        x = np.zeros(design.n)
        x[design.integer_mask] = lo[int_cols]
        if cont.size:
            sub = LpModel("min", instance.design_cost[cont], design.A[:, cont] if design.m else np.zeros((0, cont.size)),
                          design.relations, design.rhs - (design.A[:, design.integer_mask] @ x[design.integer_mask]
                                                          if design.m else np.zeros(0)),
                          lo[rm.x_cols[cont]], up[rm.x_cols[cont]])
            res = solve_lp(sub)
            if res.status is not Status.OPTIMAL:
                return None
            x[cont] = res.x
        full = np.zeros(n_cols)
        full[rm.x_cols] = x
        for k, sc in enumerate(instance.scenarios):
            try:
                v, rule = policy_iteration(sc, x)
            except (RuntimeError, np.linalg.LinAlgError):
                return None
            S = sc.num_states
            idx = np.arange(S)
            occ = np.linalg.solve((np.eye(S) - sc.discount * sc.transition[idx, rule]).T,
                                  sc.probability * sc.initial_dist)
            gamma = np.zeros((S, sc.num_actions))
            gamma[idx, rule] = occ
            delta = np.zeros_like(gamma)
            delta[idx, rule] = 1.0
            full[rm.v_cols[k]] = v
            full[rm.gamma_cols[k]] = gamma
            full[rm.delta_cols[k]] = delta
        return full

    return complete


def solve_integrated(instance: DesignMdpInstance, kind: str = UNIFORM, *, engine: str = "internal",
                     node_limit: int = 1_000_000, tol: float = 1e-6, structured: bool = True) -> IntegratedSolution:
    """Solve the design problem through the big-M MIP and validate the result.

    With ``structured`` (the default) the engine is told to branch on the
    integer design columns first and is given :func:`mdp_completion`;
    engines that do not use hints ignore them. ``structured=False`` runs
    plain most-fractional branching on the MIP.

    Raises :class:`BigMValidityError` when the re-solved objective differs
    from the MIP objective by more than ``tol`` (relative).
    """
    t0 = time.perf_counter()
    scheme = compute_big_m(instance, kind)
    rm = build_single_level_mip(instance, scheme)
    eng = get_engine(engine)
    hints = {}
    if structured:
        hints = {"priority": rm.x_cols[instance.design.integer_mask],
                 "completion": mdp_completion(instance, rm)}
    res = eng.solve_mip(rm.model, node_limit=node_limit, **hints)
    solve_s = time.perf_counter() - t0
    stats = {"nodes": res.nodes, "lp_iterations": res.iterations, "solve_seconds": solve_s,
             "bigm": scheme.kind, "engine": eng.name, "structured": bool(structured),
             "columns": rm.model.lp.num_vars, "rows": rm.model.lp.num_rows}
    if res.status is not Status.OPTIMAL:
        return IntegratedSolution(res.status.value, None, float("nan"), [], "mip_reformulation", stats)

    x = res.x[rm.x_cols].copy()
    mask = instance.design.integer_mask
    x[mask] = np.round(x[mask]) + 0.0  # no negative zeros
    stats["mip_objective"] = float(res.objective)
    try:
        obj, per = objective_at(instance, x)
    except InfeasibleDesignError:
        raise BigMValidityError(res.objective, float("nan"), x) from None
    if abs(obj - res.objective) > tol * max(1.0, abs(res.objective)):
        raise BigMValidityError(float(res.objective), obj, x)
    return IntegratedSolution("optimal", x, obj, per, "mip_reformulation", stats,
                              raw={"mip_x": res.x, "reformulated": rm, "scheme": scheme})


def export_lp(instance: DesignMdpInstance, path, kind: str = UNIFORM) -> None:
    rm = build_single_level_mip(instance, compute_big_m(instance, kind))
    with open(path, "w") as fh:
        fh.write(to_lp_text(rm.model))


def export_bilevel(instance: DesignMdpInstance, directory) -> dict:
    """Write the bilevel form as a leader LP file, one follower LP file per
    scenario, and ``manifest.json`` naming the linking and follower columns."""
    os.makedirs(directory, exist_ok=True)
    design = instance.design
    n = design.n
    leader_cols = [f"x[{j}]" for j in range(n)]
    v_names = [[f"v[{k},{s}]" for s in range(sc.num_states)] for k, sc in enumerate(instance.scenarios)]
    n_v = sum(len(v) for v in v_names)

    obj = np.concatenate([instance.design_cost] + [sc.probability * sc.initial_dist for sc in instance.scenarios])
    lower = np.concatenate([design.lower, np.full(n_v, -np.inf)])
    upper = np.concatenate([design.upper, np.full(n_v, np.inf)])
    A = np.hstack([design.A, np.zeros((design.m, n_v))])
    leader = MipModel(LpModel("min", obj, A, design.relations, design.rhs, lower, upper,
                              leader_cols + [v for vs in v_names for v in vs]),
                      list(design.integrality) + [CONTINUOUS] * n_v)
    files = {"leader": "leader.lp", "followers": []}
    with open(os.path.join(directory, "leader.lp"), "w") as fh:
        fh.write(to_lp_text(leader))

    for k, sc in enumerate(instance.scenarios):
        S, A_k = sc.num_states, sc.num_actions
        bellman = np.repeat(np.eye(S), A_k, axis=0) - sc.discount * sc.transition.reshape(S * A_k, S)
        rows = np.hstack([-sc.cost_f.reshape(S * A_k, n), bellman])
        follower = LpModel("max", np.concatenate([np.zeros(n), np.ones(S)]), rows,
                           [Relation.LE] * (S * A_k), sc.cost_g.reshape(-1),
                           np.concatenate([design.lower, np.full(S, -np.inf)]),
                           np.concatenate([design.upper, np.full(S, np.inf)]),
                           leader_cols + v_names[k])
        fname = f"follower_{k}.lp"
        with open(os.path.join(directory, fname), "w") as fh:
            fh.write(to_lp_text(follower))
        files["followers"].append({"file": fname, "scenario": k, "probability": sc.probability,
                                   "follower_columns": v_names[k]})

    manifest = {"format": "bilevel-lp", "version": 1, "leader_columns": leader_cols,
                "linking_columns": leader_cols, **files}
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest
