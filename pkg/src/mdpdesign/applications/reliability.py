"""Component selection with maintenance.

The design picks exactly one option for every slot of a series system under
a purchase budget. Every option carries a working/failed status, so the
state space is the product of all option statuses and does not depend on
the design. An action is a set of slots to repair; repairing a slot repairs
every failed option in it. Costs are charged per option and multiplied by
its selection variable, so options that were not bought never cost anything
and their status is irrelevant:

    x_i * (operation + downtime * failed_i + repair * failed_i * [slot(i) repaired])

Downtime is charged for every failed selected component. The system starts
with every component working.

Config keys::

    slots:      [[{cost, operation_cost, repair_cost, downtime_cost}, ...], ...]
    budget:     purchase budget
    scenarios:  [{probability, discount, fail_prob: [slot][option],
                  repair_prob: [slot][option] (default 1)}, ...]
    state_cap:  optional, default 1024
"""

from __future__ import annotations

import numpy as np

from ..design import DesignMdpInstance, DesignSpace
from ..lp.model import BINARY, Relation
from ..mdp import ScenarioMdp
from .common import DEFAULT_STATE_CAP, check_cap, joint_transition, product_space, scenario_probabilities


def _status_row(failed: int, repaired: bool, fail: float, repair: float) -> np.ndarray:
    if not failed:
        return np.array([1.0 - fail, fail])
    if repaired:
        return np.array([repair, 1.0 - repair])
    return np.array([0.0, 1.0])


def build_reliability_instance(config: dict) -> DesignMdpInstance:
    slots = config["slots"]
    options = [(j, o) for j, slot in enumerate(slots) for o in range(len(slot))]
    N, J = len(options), len(slots)
    if J == 0 or any(len(s) == 0 for s in slots):
        raise ValueError("every slot needs at least one option")
    cap = int(config.get("state_cap", DEFAULT_STATE_CAP))
    check_cap(2 ** N, cap, f"reliability model with {N} options")

    spec = [slots[j][o] for j, o in options]
    cost = np.array([float(s["cost"]) for s in spec])
    A = [cost]
    rels = [Relation.LE]
    rhs = [float(config["budget"])]
    for j in range(J):
        A.append(np.array([1.0 if oj == j else 0.0 for oj, _ in options]))
        rels.append(Relation.EQ)
        rhs.append(1.0)
    design = DesignSpace(np.zeros(N), np.ones(N), [BINARY] * N, np.array(A), rels, rhs)

    states = product_space([2] * N)
    actions = product_space([2] * J)
    op = np.array([float(s.get("operation_cost", 0.0)) for s in spec])
    rep = np.array([float(s.get("repair_cost", 0.0)) for s in spec])
    down = np.array([float(s.get("downtime_cost", 0.0)) for s in spec])
    slot_of = np.array([j for j, _ in options])

    F = np.empty((len(states), len(actions), N))
    for si, st in enumerate(states):
        failed = np.array(st, dtype=float)
        for ai, act in enumerate(actions):
            repaired = np.array(act, dtype=float)[slot_of]
            F[si, ai] = op + down * failed + rep * failed * repaired
    G = np.zeros((len(states), len(actions)))
    alpha = np.zeros(len(states))
    alpha[0] = 1.0

    scenarios = []
    q = scenario_probabilities(config["scenarios"])
    for k, sc in enumerate(config["scenarios"]):
        fail = np.array([float(sc["fail_prob"][j][o]) for j, o in options])
        rp = sc.get("repair_prob")
        repair = np.ones(N) if rp is None else np.array([float(rp[j][o]) for j, o in options])
        P = np.empty((len(states), len(actions), len(states)))
        for si, st in enumerate(states):
            for ai, act in enumerate(actions):
                P[si, ai] = joint_transition(
                    _status_row(st[i], bool(act[slot_of[i]]), fail[i], repair[i]) for i in range(N))
        scenarios.append(ScenarioMdp(P, F, G, alpha, float(sc["discount"]), q[k]))
    return DesignMdpInstance(design, cost, scenarios)
