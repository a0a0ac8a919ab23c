"""Location selection followed by inventory control with Markovian demand.

Design: binary ``x`` choosing exactly ``select`` locations, plus initial stock
``u`` with ``0 <= u_i <= capacity_i * x_i`` bought at ``unit_cost``. The
operational model starts from empty shelves, so ``u`` only enters through its
purchase cost and its link to ``x``.

Each location has state (stock level 0..capacity, demand level) and orders
0..capacity units per period. The order arrives at once, the current demand
level is served from stock, unmet demand is lost, and the demand level then
moves along its chain. Per location the period cost is

    x_i * (fixed + order * a + holding * stock' + shortage * lost - revenue * sold)
    + (1 - x_i) * (order_penalty * a + idle_stock_penalty * [stock > 0])
    + overflow_penalty * ([stock + a > capacity] x_i + [stock + a > 0] (1 - x_i))

which is affine in ``x`` because ``x`` is binary. The penalties keep
unselected locations empty and stop orders beyond capacity.

Config keys::

    locations:  [{startup_cost, capacity, unit_cost}, ...]
    select:     number of locations to open
    order_penalty, idle_stock_penalty, overflow_penalty: defaults 1000
    initial_inventory: "continuous" (default) or "integer"
    scenarios:  [{probability, discount, demand_levels: [loc][level],
                  demand_transition: [loc][level][level],
                  initial_demand: [loc][level] (default: all mass on level 0),
                  fixed_cost, order_cost, holding_cost, shortage_cost, revenue: [loc]}, ...]
    state_cap:  optional, default 1024
"""

from __future__ import annotations

import numpy as np

from ..design import DesignMdpInstance, DesignSpace
from ..lp.model import BINARY, CONTINUOUS, INTEGER, Relation
from ..mdp import ScenarioMdp
from .common import DEFAULT_STATE_CAP, check_cap, joint_transition, product_space, scenario_probabilities

DEFAULT_PENALTY = 1000.0


def _location_tables(cap_i, levels, rates, i, pen):
    """Per-location (x-coefficient, constant) cost and next-stock tables indexed [stock, level, order]."""
    L, D = cap_i + 1, len(levels)
    coef = np.zeros((L, D, L))
    const = np.zeros((L, D, L))
    nxt = np.zeros((L, D, L), dtype=int)
    for s in range(L):
        for d, dem in enumerate(levels):
            for a in range(L):
                sold = min(s + a, dem)
                post = min(s + a - sold, cap_i)
                lost = dem - sold
                on = (rates["fixed_cost"][i] + rates["order_cost"][i] * a + rates["holding_cost"][i] * post
                      + rates["shortage_cost"][i] * lost - rates["revenue"][i] * sold)
                off = pen["order"] * a + pen["idle"] * (s > 0)
                over_on = pen["overflow"] * (s + a > cap_i)
                over_off = pen["overflow"] * (s + a > 0)
                coef[s, d, a] = on - off + over_on - over_off
                const[s, d, a] = off + over_off
                nxt[s, d, a] = post
    return coef, const, nxt


def build_inventory_instance(config: dict) -> DesignMdpInstance:
    locs = config["locations"]
    R = len(locs)
    r = int(config["select"])
    caps = [int(l["capacity"]) for l in locs]
    pen = {"order": float(config.get("order_penalty", DEFAULT_PENALTY)),
           "idle": float(config.get("idle_stock_penalty", DEFAULT_PENALTY)),
           "overflow": float(config.get("overflow_penalty", DEFAULT_PENALTY))}
    u_kind = {"continuous": CONTINUOUS, "integer": INTEGER}[config.get("initial_inventory", "continuous")]
    cap = int(config.get("state_cap", DEFAULT_STATE_CAP))

    n = 2 * R
    A = np.zeros((1 + R, n))
    A[0, :R] = 1.0
    for i in range(R):
        A[1 + i, R + i] = 1.0
        A[1 + i, i] = -caps[i]
    design = DesignSpace(np.zeros(n), np.array([1.0] * R + [float(c) for c in caps]),
                         [BINARY] * R + [u_kind] * R, A, [Relation.EQ] + [Relation.LE] * R,
                         [float(r)] + [0.0] * R)
    design_cost = np.array([float(l["startup_cost"]) for l in locs] + [float(l.get("unit_cost", 0.0)) for l in locs])

    q = scenario_probabilities(config["scenarios"])
    scenarios = []
    for k, sc in enumerate(config["scenarios"]):
        levels = [[int(v) for v in sc["demand_levels"][i]] for i in range(R)]
        dims = []
        for i in range(R):
            dims += [caps[i] + 1, len(levels[i])]
        check_cap(int(np.prod(dims)), cap, f"inventory scenario {k}")
        states = product_space(dims)
        actions = product_space([c + 1 for c in caps])
        index = {st: j for j, st in enumerate(states)}
        rates = {key: [float(v) for v in sc[key]]
                 for key in ("fixed_cost", "order_cost", "holding_cost", "shortage_cost", "revenue")}
        tables = [_location_tables(caps[i], levels[i], rates, i, pen) for i in range(R)]
        chains = [np.asarray(sc["demand_transition"][i], dtype=float) for i in range(R)]

        S, Acount = len(states), len(actions)
        F = np.zeros((S, Acount, n))
        G = np.zeros((S, Acount))
        P = np.zeros((S, Acount, S))
        for si, st in enumerate(states):
            for ai, act in enumerate(actions):
                factors = []
                for i in range(R):
                    s_i, d_i, a_i = st[2 * i], st[2 * i + 1], act[i]
                    coef, const, nxt = tables[i]
                    F[si, ai, i] = coef[s_i, d_i, a_i]
                    G[si, ai] += const[s_i, d_i, a_i]
                    stock = np.zeros(caps[i] + 1)
                    stock[nxt[s_i, d_i, a_i]] = 1.0
                    factors += [stock, chains[i][d_i]]
                P[si, ai] = joint_transition(factors)

        init = sc.get("initial_demand")
        alpha = np.zeros(S)
        for st, j in index.items():
            if any(st[2 * i] != 0 for i in range(R)):
                continue
            w = 1.0
            for i in range(R):
                d = st[2 * i + 1]
                w *= (1.0 if d == 0 else 0.0) if init is None else float(init[i][d])
            alpha[j] = w
        scenarios.append(ScenarioMdp(P, F, G, alpha, float(sc["discount"]), q[k]))
    return DesignMdpInstance(design, design_cost, scenarios)
