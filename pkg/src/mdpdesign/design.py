"""Design space, integrated instances and evaluation of a fixed design."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp.model import BINARY, CONTINUOUS, INTEGER, VAR_KINDS, Relation
from .mdp import InvalidModelError, ScenarioMdp, policy_iteration

FEAS_TOL = 1e-6


class InfeasibleDesignError(ValueError):
    pass


def _frozen(a):
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


class DesignSpace:
    """Mixed-integer box plus linear rows ``A x (rel) rhs``."""

    def __init__(self, lower, upper, integrality, A=None, relations=(), rhs=()):
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        n = lower.shape[0]
        integrality = [str(k) for k in integrality]
        A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
        relations = [Relation.parse(r) for r in relations]
        rhs = np.asarray(rhs, dtype=float).reshape(-1)
        problems = design_violations(lower, upper, integrality, A, relations, rhs)
        if problems:
            raise InvalidModelError(problems)
        self.lower = _frozen(lower)
        self.upper = _frozen(upper)
        self.integrality = tuple(integrality)
        self.A = _frozen(A)
        self.relations = tuple(relations)
        self.rhs = _frozen(rhs)

    def __eq__(self, other):
        if not isinstance(other, DesignSpace):
            return NotImplemented
        return (self.integrality == other.integrality and self.relations == other.relations
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("lower", "upper", "A", "rhs")))

    __hash__ = None

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def n1(self) -> int:
        return sum(k == CONTINUOUS for k in self.integrality)

    @property
    def n2(self) -> int:
        return self.n - self.n1

    @property
    def m(self) -> int:
        return self.rhs.shape[0]

    @property
    def integer_mask(self) -> np.ndarray:
        return np.array([k != CONTINUOUS for k in self.integrality], dtype=bool)

    @property
    def constraints(self):
        return [(self.A[i], self.relations[i], float(self.rhs[i])) for i in range(self.m)]


def design_violations(lower, upper, integrality, A, relations, rhs) -> list:
    out = []
    n = len(lower)
    if len(upper) != n or len(integrality) != n:
        return ["bounds and integrality must have one entry per design variable"]
    for j in range(n):
        kind = integrality[j]
        if kind not in VAR_KINDS:
            out.append(f"design variable {j}: unknown kind {kind!r}")
            continue
        if lower[j] > upper[j]:
            out.append(f"design variable {j}: lower bound {lower[j]} exceeds upper bound {upper[j]}")
        if kind != CONTINUOUS and not (np.isfinite(lower[j]) and np.isfinite(upper[j])):
            out.append(f"design variable {j}: integer variables need finite bounds")
        if kind == BINARY and (lower[j] < 0 or upper[j] > 1):
            out.append(f"design variable {j}: binary bounds must lie within [0, 1]")
    if A.shape[1] != n:
        out.append(f"constraint coefficient vectors must have length {n}")
    if not (A.shape[0] == len(relations) == len(rhs)):
        out.append("constraint rows, relations and right-hand sides disagree in count")
    return out


def check_design_feasible(space: DesignSpace, x, tol: float = FEAS_TOL) -> bool:
    """Bounds, integrality and every constraint row hold within ``tol``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != space.n:
        raise ValueError(f"design vector has length {x.shape[0]}, expected {space.n}")
    if np.any(x < space.lower - tol) or np.any(x > space.upper + tol):
        return False
    xi = x[space.integer_mask]
    if np.any(np.abs(xi - np.round(xi)) > tol):
        return False
    if space.m:
        act = space.A @ x - space.rhs
        for rel, r in zip(space.relations, act):
            if rel is Relation.LE and r > tol:
                return False
            if rel is Relation.GE and r < -tol:
                return False
            if rel is Relation.EQ and abs(r) > tol:
                return False
    return True


class DesignMdpInstance:
    """Design space, design cost vector and the scenario MDPs."""

    def __init__(self, design: DesignSpace, design_cost, scenarios):
        design_cost = _frozen(np.asarray(design_cost, dtype=float).reshape(-1))
        scenarios = tuple(scenarios)
        problems = []
        if design_cost.shape[0] != design.n:
            problems.append(f"design_cost has length {design_cost.shape[0]}, expected {design.n}")
        if not scenarios:
            problems.append("at least one scenario is required")
        for k, sc in enumerate(scenarios):
            if sc.num_design != design.n:
                problems.append(f"scenario {k}: cost_f has {sc.num_design} design coefficients, expected {design.n}")
        q = np.array([sc.probability for sc in scenarios])
        if scenarios and abs(q.sum() - 1.0) > 1e-9:
            problems.append(f"scenario probabilities sum to {q.sum()!r}, not 1")
        if problems:
            raise InvalidModelError(problems)
        self.design = design
        self.design_cost = design_cost
        self.scenarios = scenarios

    def __eq__(self, other):
        if not isinstance(other, DesignMdpInstance):
            return NotImplemented
        return (self.design == other.design and np.array_equal(self.design_cost, other.design_cost)
                and self.scenarios == other.scenarios)

    __hash__ = None

    def __repr__(self):
        sizes = ", ".join(f"{s.num_states}x{s.num_actions}" for s in self.scenarios[:4])
        more = ", ..." if len(self.scenarios) > 4 else ""
        return (f"DesignMdpInstance(n={self.design.n}, m={self.design.m}, "
                f"K={len(self.scenarios)}, scenarios=[{sizes}{more}])")

    @property
    def num_scenarios(self) -> int:
        return len(self.scenarios)

    def dims(self) -> dict:
        return {
            "n": self.design.n, "n1": self.design.n1, "n2": self.design.n2, "m": self.design.m,
            "K": self.num_scenarios,
            "S": max(s.num_states for s in self.scenarios),
            "A": max(s.num_actions for s in self.scenarios),
        }


@dataclass
class ScenarioSolution:
    values: np.ndarray
    rule: np.ndarray
    u: float


@dataclass
class IntegratedSolution:
    status: str
    x: np.ndarray | None
    objective: float
    per_scenario: list = field(default_factory=list)
    method: str = ""
    stats: dict = field(default_factory=dict)
    raw: dict | None = field(default=None, repr=False, compare=False)

    def recompute_objective(self, instance: DesignMdpInstance) -> float:
        return float(instance.design_cost @ self.x) + sum(
            sc.probability * ps.u for sc, ps in zip(instance.scenarios, self.per_scenario))


def solve_scenarios(instance: DesignMdpInstance, x) -> list:
    out = []
    for sc in instance.scenarios:
        v, rule = policy_iteration(sc, x)
        out.append(ScenarioSolution(v, rule, float(sc.initial_dist @ v)))
    return out


def objective_at(instance: DesignMdpInstance, x, tol: float = FEAS_TOL):
    """``c'x + sum_k q_k alpha_k' v_k(x)`` for a feasible design ``x``.

    Returns ``(objective, per_scenario)``; scenario terms are summed in
    scenario order so the result is deterministic.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if not check_design_feasible(instance.design, x, tol):
        raise InfeasibleDesignError(f"design {x.tolist()} is infeasible")
    per = solve_scenarios(instance, x)
    total = float(instance.design_cost @ x)
    for sc, ps in zip(instance.scenarios, per):
        total += sc.probability * ps.u
    return total, per


def evaluate_design(instance: DesignMdpInstance, x, method: str = "evaluation") -> IntegratedSolution:
    obj, per = objective_at(instance, x)
    return IntegratedSolution("optimal", np.asarray(x, dtype=float), obj, per, method)


__all__ = [
    "BINARY", "CONTINUOUS", "INTEGER", "DesignMdpInstance", "DesignSpace", "FEAS_TOL",
    "InfeasibleDesignError", "IntegratedSolution", "ScenarioSolution", "check_design_feasible",
    "evaluate_design", "objective_at", "solve_scenarios",
]
