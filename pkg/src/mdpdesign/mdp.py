"""Discounted-cost MDPs whose immediate costs are affine in a design vector.

For a design ``x`` the cost of taking action ``a`` in state ``s`` is
``cost_f[s, a] @ x + cost_g[s, a]``. Values are expected total discounted
costs, so every solver here minimises.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .lp.model import LpModel, Relation

# cost assigned to state-action pairs that should never be chosen
PROHIBITIVE_COST = 1e6
PROB_TOL = 1e-9


class InvalidModelError(ValueError):
    """Raised when a model violates one of its structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class AffineCost:
    f: np.ndarray
    g: float

    def __call__(self, x) -> float:
        return evaluate_cost(self, x)


def evaluate_cost(cost: AffineCost, x) -> float:
    f = np.asarray(cost.f, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if f.shape != x.shape:
        raise ValueError(f"design vector has length {x.shape[0]}, cost expects {f.shape[0]}")
    return float(f @ x + cost.g)


def mdp_violations(transition, cost_f, cost_g, initial_dist, discount, probability, n=None) -> list:
    """List the invariant violations of raw scenario data (empty when valid)."""
    out = []
    P = np.asarray(transition, dtype=float)
    if P.ndim != 3 or P.shape[0] != P.shape[2] or P.shape[0] == 0 or P.shape[1] == 0:
        return [f"transition must have shape (S, A, S) with S, A >= 1, got {P.shape}"]
    S, A = P.shape[:2]
    F = np.asarray(cost_f, dtype=float)
    G = np.asarray(cost_g, dtype=float)
    alpha = np.asarray(initial_dist, dtype=float)
    if F.ndim != 3 or F.shape[:2] != (S, A):
        out.append(f"cost_f must have shape ({S}, {A}, n), got {F.shape}")
    elif n is not None and F.shape[2] != n:
        out.append(f"cost_f has {F.shape[2]} design coefficients per pair, expected {n}")
    if G.shape != (S, A):
        out.append(f"cost_g must have shape ({S}, {A}), got {G.shape}")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
        out.append("costs must be finite")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        s, a, _ = np.argwhere((P < 0) | ~np.isfinite(P))[0]
        out.append(f"transition row (s={s}, a={a}) has a negative or non-finite entry")
    sums = P.sum(axis=2)
    bad = np.argwhere(np.abs(sums - 1.0) > PROB_TOL)
    for s, a in bad[:5]:
        out.append(f"transition row (s={s}, a={a}) sums to {sums[s, a]!r}, not 1")
    if len(bad) > 5:
        out.append(f"... and {len(bad) - 5} more transition rows not summing to 1")
    if alpha.shape != (S,):
        out.append(f"initial_dist must have length {S}")
    elif np.any(alpha < 0) or abs(alpha.sum() - 1.0) > PROB_TOL:
        out.append(f"initial_dist must be nonnegative and sum to 1 (sums to {alpha.sum()!r})")
    if not (0.0 < discount < 1.0):
        out.append(f"discount must lie in (0, 1), got {discount!r}")
    if not (0.0 < probability <= 1.0):
        out.append(f"scenario probability must lie in (0, 1], got {probability!r}")
    return out


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, order="C", copy=True)
    arr.setflags(write=False)
    return arr


class ScenarioMdp:
    """One scenario's MDP. Immutable; arrays are read-only views."""

    __slots__ = ("transition", "cost_f", "cost_g", "initial_dist", "discount", "probability")

    def __init__(self, transition, cost_f, cost_g, initial_dist, discount, probability=1.0):
        problems = mdp_violations(transition, cost_f, cost_g, initial_dist, discount, probability)
        if problems:
            raise InvalidModelError(problems)
        object.__setattr__(self, "transition", _frozen(transition))
        object.__setattr__(self, "cost_f", _frozen(cost_f))
        object.__setattr__(self, "cost_g", _frozen(cost_g))
        object.__setattr__(self, "initial_dist", _frozen(initial_dist))
        object.__setattr__(self, "discount", float(discount))
        object.__setattr__(self, "probability", float(probability))

    def __setattr__(self, name, value):
        raise AttributeError("ScenarioMdp is immutable")

    def __eq__(self, other):
        if not isinstance(other, ScenarioMdp):
            return NotImplemented
        return (self.discount == other.discount and self.probability == other.probability
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("transition", "cost_f", "cost_g", "initial_dist")))

    __hash__ = None

    def __repr__(self):
        return (f"ScenarioMdp(S={self.num_states}, A={self.num_actions}, n={self.num_design}, "
                f"discount={self.discount}, probability={self.probability})")

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def num_design(self) -> int:
        return self.cost_f.shape[2]

    def cost(self, s: int, a: int) -> AffineCost:
        return AffineCost(self.cost_f[s, a], float(self.cost_g[s, a]))

    def costs_at(self, x) -> np.ndarray:
        """Immediate cost table (S, A) at design ``x``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.num_design:
            raise ValueError(f"design vector has length {x.shape[0]}, MDP expects {self.num_design}")
        return np.ascontiguousarray(self.cost_f @ x + self.cost_g)

    def replace(self, **changes) -> "ScenarioMdp":
        kw = {k: getattr(self, k) for k in self.__slots__}
        kw.update(changes)
        return ScenarioMdp(**kw)


def _check_rule(mdp: ScenarioMdp, rule) -> np.ndarray:
    rule = np.asarray(rule)
    if rule.shape != (mdp.num_states,) or not np.issubdtype(rule.dtype, np.integer):
        raise ValueError(f"decision rule must be an integer vector of length {mdp.num_states}")
    if np.any(rule < 0) or np.any(rule >= mdp.num_actions):
        raise ValueError("decision rule contains an invalid action index")
    return rule.astype(np.int64)


def _evaluate(mdp: ScenarioMdp, C: np.ndarray, rule: np.ndarray) -> np.ndarray:
    idx = np.arange(mdp.num_states)
    M = np.eye(mdp.num_states) - mdp.discount * mdp.transition[idx, rule]
    return np.linalg.solve(M, C[idx, rule])


def policy_value(mdp: ScenarioMdp, x, rule) -> np.ndarray:
    """Value of stationary rule ``rule``: solves ``(I - lam P_d) v = h_d(x)``."""
    rule = _check_rule(mdp, rule)
    return _evaluate(mdp, mdp.costs_at(x), rule)


def q_values(mdp: ScenarioMdp, x, v) -> np.ndarray:
    return mdp.costs_at(x) + mdp.discount * (mdp.transition @ np.asarray(v, dtype=float))


def bellman_residual(mdp: ScenarioMdp, x, v) -> float:
    """Sup-norm distance between ``v`` and its Bellman backup."""
    Q = q_values(mdp, x, v)
    return float(np.max(np.abs(Q.min(axis=1) - v)))


def value_iteration(mdp: ScenarioMdp, x, eps: float = 1e-8, max_iter: int = 1_000_000):
    """Successive approximation from ``v = 0``.

    Stops once successive iterates differ by less than ``eps (1-lam) / (2 lam)``
    in sup-norm, which puts the returned values within ``eps`` of optimal.
    Returns ``(values, rule)`` with the rule greedy for the returned values.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    C = mdp.costs_at(x)
    P = mdp.transition
    lam = mdp.discount
    threshold = eps * (1.0 - lam) / (2.0 * lam)
    v = np.zeros(mdp.num_states)
    for _ in range(max_iter):
        v_next, _rule = kernels.bellman_backup(P, C, v, lam)
        diff = float(np.max(np.abs(v_next - v)))
        v = v_next
        if diff < threshold:
            break
    else:
        raise RuntimeError("value iteration did not converge")
    _, rule = kernels.bellman_backup(P, C, v, lam)
    return v, rule


def policy_iteration(mdp: ScenarioMdp, x, max_iter: int = 100_000):
    """Howard policy iteration; returns ``(values, rule)``.

    Starts from the myopic rule, switches an action only on strict
    improvement (1e-12 relative) and prefers the lowest action index on ties.
    """
    C = mdp.costs_at(x)
    idx = np.arange(mdp.num_states)
    rule = C.argmin(axis=1).astype(np.int64)
    for _ in range(max_iter):
        v = _evaluate(mdp, C, rule)
        Q = C + mdp.discount * (mdp.transition @ v)
        best = Q.argmin(axis=1)
        cur = Q[idx, rule]
        better = Q[idx, best] < cur - 1e-12 * np.maximum(1.0, np.abs(cur))
        if not better.any():
            return v, rule
        rule = np.where(better, best, rule).astype(np.int64)
    raise RuntimeError("policy iteration did not terminate")


def scenario_value(mdp: ScenarioMdp, x) -> float:
    """Expected optimal cost from the initial distribution, ``alpha @ v(x)``."""
    v, _ = policy_iteration(mdp, x)
    return float(mdp.initial_dist @ v)


def build_primal_lp(mdp: ScenarioMdp, x) -> LpModel:
    """``max 1'v`` subject to one Bellman inequality per state-action pair."""
    S, A = mdp.num_states, mdp.num_actions
    C = mdp.costs_at(x)
    lam = mdp.discount
    rows = np.repeat(np.eye(S), A, axis=0) - lam * mdp.transition.reshape(S * A, S)
    return LpModel(
        sense="max",
        objective=np.ones(S),
        A=rows,
        relations=[Relation.LE] * (S * A),
        rhs=C.reshape(-1),
        lower=np.full(S, -np.inf),
        upper=np.full(S, np.inf),
        var_names=[f"v[{s}]" for s in range(S)],
    )


def build_dual_lp(mdp: ScenarioMdp, x, state_weights=None) -> LpModel:
    """Occupancy-measure dual: ``min sum gamma[s,a] cost(s,a,x)``.

    Column ``s * A + a`` holds ``gamma[s, a]``. With all-ones weights this is
    the exact dual of :func:`build_primal_lp`.
    """
    S, A = mdp.num_states, mdp.num_actions
    w = np.ones(S) if state_weights is None else np.asarray(state_weights, dtype=float)
    if w.shape != (S,) or np.any(w <= 0):
        raise ValueError("state_weights must be a strictly positive vector of length S")
    C = mdp.costs_at(x)
    # row s, column (s', a): [s' == s] - lam * p(s | s', a)
    balance = np.repeat(np.eye(S), A, axis=1) - mdp.discount * mdp.transition.reshape(S * A, S).T
    return LpModel(
        sense="min",
        objective=C.reshape(-1),
        A=balance,
        relations=[Relation.EQ] * S,
        rhs=w,
        lower=np.zeros(S * A),
        upper=np.full(S * A, np.inf),
        var_names=[f"gamma[{s},{a}]" for s in range(S) for a in range(A)],
    )
