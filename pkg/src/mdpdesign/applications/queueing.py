"""Server staffing with customer-to-server assignment.

Design: integer server counts ``x_i <= max_i`` with ``sum(x) <= total_limit``,
bought at ``cost_i``. Each count is mirrored by unary binaries
``z[i, l] = [x_i >= l]`` (rows ``x_i = sum_l z[i, l]`` and
``z[i, l] >= z[i, l+1]``); they carry no cost and exist so that "more
customers assigned to type ``i`` than servers bought" has the affine
indicator ``1 - z[i, n_i]``.

State: number of waiting customers of each type (0..capacity). Action: how
many customers of each type go to each server type this period. Served
customers leave whether or not service succeeds; then arrivals come in,
drawn per type from a categorical distribution over 0, 1, 2, ... . Arrivals
beyond capacity are turned away at ``rejection_penalty`` each. Period cost

    sum_i operating_i x_i - sum_ij n_ij success_ij reward_ij
    + holding_cost * waiting + rejection_penalty * E[turned away]
    + mask_penalty * (assignments the state or the design cannot support)

Config keys::

    servers:   [{max, cost}, ...]
    total_limit, capacity (per customer type, list), rejection_penalty,
    holding_cost (default 0), mask_penalty (default 1e6)
    scenarios: [{probability, discount, success_prob: [server][customer],
                 reward: [server][customer], operating_cost: [server],
                 arrivals: [customer][count]}, ...]
    state_cap: optional, default 1024
"""

from __future__ import annotations

import numpy as np

from ..design import DesignMdpInstance, DesignSpace
from ..lp.model import BINARY, INTEGER, Relation
from ..mdp import PROHIBITIVE_COST, ScenarioMdp
from .common import DEFAULT_STATE_CAP, check_cap, joint_transition, product_space, scenario_probabilities


def server_counts(config: dict, design) -> np.ndarray:
    """The integer server counts inside a full design vector."""
    return np.asarray(design, dtype=float)[: len(config["servers"])]


def _design(config):
    servers = config["servers"]
    m = len(servers)
    rmax = [int(s["max"]) for s in servers]
    nz = sum(rmax)
    n = m + nz
    z_of = []  # z_of[i][l-1] = column of z[i, l]
    col = m
    for i in range(m):
        z_of.append(list(range(col, col + rmax[i])))
        col += rmax[i]
    rows, rels, rhs = [], [], []
    for i in range(m):
        row = np.zeros(n)
        row[i] = 1.0
        rows.append(row), rels.append(Relation.LE), rhs.append(float(rmax[i]))
    row = np.zeros(n)
    row[:m] = 1.0
    rows.append(row), rels.append(Relation.LE), rhs.append(float(config["total_limit"]))
    for i in range(m):
        row = np.zeros(n)
        row[i] = 1.0
        row[z_of[i]] = -1.0
        rows.append(row), rels.append(Relation.EQ), rhs.append(0.0)
        for a, b in zip(z_of[i], z_of[i][1:]):
            row = np.zeros(n)
            row[a], row[b] = 1.0, -1.0
            rows.append(row), rels.append(Relation.GE), rhs.append(0.0)
    upper = np.array([float(r) for r in rmax] + [1.0] * nz)
    space = DesignSpace(np.zeros(n), upper, [INTEGER] * m + [BINARY] * nz,
                        np.array(rows).reshape(len(rows), n), rels, rhs)
    cost = np.array([float(s["cost"]) for s in servers] + [0.0] * nz)
    return space, cost, z_of


def build_queue_instance(config: dict) -> DesignMdpInstance:
    servers = config["servers"]
    m = len(servers)
    caps = [int(c) for c in config["capacity"]]
    J = len(caps)
    rmax = [int(s["max"]) for s in servers]
    mask = float(config.get("mask_penalty", PROHIBITIVE_COST))
    rej = float(config["rejection_penalty"])
    hold = float(config.get("holding_cost", 0.0))
    state_cap = int(config.get("state_cap", DEFAULT_STATE_CAP))

    space, design_cost, z_of = _design(config)
    n = space.n
    states = product_space([c + 1 for c in caps])
    check_cap(len(states), state_cap, "queue model")
    actions = product_space([min(rmax[i], caps[j]) + 1 for i in range(m) for j in range(J)])
    S, A = len(states), len(actions)
    index = {st: k for k, st in enumerate(states)}

    q = scenario_probabilities(config["scenarios"])
    scenarios = []
    for k, sc in enumerate(config["scenarios"]):
        succ = np.asarray(sc["success_prob"], dtype=float).reshape(m, J)
        rew = np.asarray(sc["reward"], dtype=float).reshape(m, J)
        oper = np.asarray(sc["operating_cost"], dtype=float).reshape(m)
        arrivals = [np.asarray(p, dtype=float) for p in sc["arrivals"]]
        F = np.zeros((S, A, n))
        F[:, :, :m] = oper
        G = np.zeros((S, A))
        P = np.zeros((S, A, S))
        for si, st in enumerate(states):
            for ai, act in enumerate(actions):
                nij = np.array(act, dtype=float).reshape(m, J)
                G[si, ai] -= float((nij * succ * rew).sum())
                for i in range(m):
                    ni = int(nij[i].sum())
                    if ni == 0:
                        continue
                    G[si, ai] += mask
                    if ni <= rmax[i]:
                        F[si, ai, z_of[i][ni - 1]] -= mask
                assigned = nij.sum(axis=0)
                if np.any(assigned > np.array(st)):
                    G[si, ai] += mask
                factors = []
                for j in range(J):
                    rem = max(0, st[j] - int(assigned[j]))
                    G[si, ai] += hold * rem
                    row = np.zeros(caps[j] + 1)
                    for cnt, p in enumerate(arrivals[j]):
                        total = rem + cnt
                        row[min(total, caps[j])] += p
                        G[si, ai] += rej * p * max(0, total - caps[j])
                    factors.append(row)
                P[si, ai] = joint_transition(factors)
        alpha = np.zeros(S)
        alpha[index[tuple([0] * J)]] = 1.0
        scenarios.append(ScenarioMdp(P, F, G, alpha, float(sc["discount"]), q[k]))
    return DesignMdpInstance(space, design_cost, scenarios)
