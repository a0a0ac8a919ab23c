"""Solver-agnostic linear and mixed-integer model containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="

    @classmethod
    def parse(cls, text) -> "Relation":
        if isinstance(text, Relation):
            return text
        aliases = {"<=": cls.LE, "=<": cls.LE, "=": cls.EQ, "==": cls.EQ, ">=": cls.GE, "=>": cls.GE}
        try:
            return aliases[str(text).strip()]
        except KeyError:
            raise ValueError(f"unknown relation {text!r}") from None


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NODE_LIMIT = "node_limit"


CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"
VAR_KINDS = (CONTINUOUS, INTEGER, BINARY)


@dataclass
class LpModel:
    """``sense`` c^T x subject to ``A x (rel) rhs`` and ``lower <= x <= upper``.

    Rows are stored densely; ``lower`` may hold ``-inf`` and ``upper`` ``+inf``.
    """

    sense: str
    objective: np.ndarray
    A: np.ndarray
    relations: list
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_names: list | None = None
    objective_constant: float = 0.0

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.shape[0]
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.relations = [Relation.parse(r) for r in self.relations]
        self.lower = np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if self.A.shape[0] != self.rhs.shape[0] or len(self.relations) != self.rhs.shape[0]:
            raise ValueError("row count mismatch between A, relations and rhs")
        if self.lower.shape[0] != n or self.upper.shape[0] != n:
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            bad = int(np.flatnonzero(self.lower > self.upper)[0])
            raise ValueError(f"variable {bad}: lower bound exceeds upper bound")
        if self.var_names is not None and len(self.var_names) != n:
            raise ValueError("var_names must have one entry per variable")

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.rhs.shape[0]

    def with_bounds(self, lower, upper) -> "LpModel":
        return LpModel(self.sense, self.objective, self.A, self.relations, self.rhs,
                       lower, upper, self.var_names, self.objective_constant)

    def evaluate(self, x) -> float:
        return float(self.objective @ x) + self.objective_constant

    def max_violation(self, x) -> float:
        """Largest row or bound violation at ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        viol = 0.0
        if self.num_rows:
            act = self.A @ x - self.rhs
            for rel, r in zip(self.relations, act):
                if rel is Relation.LE:
                    viol = max(viol, r)
                elif rel is Relation.GE:
                    viol = max(viol, -r)
                else:
                    viol = max(viol, abs(r))
        viol = max(viol, float(np.max(self.lower - x, initial=0.0)), float(np.max(x - self.upper, initial=0.0)))
        return viol


@dataclass
class MipModel:
    lp: LpModel
    integrality: list

    def __post_init__(self):
        self.integrality = list(self.integrality)
        if len(self.integrality) != self.lp.num_vars:
            raise ValueError("integrality must have one flag per variable")
        for j, kind in enumerate(self.integrality):
            if kind not in VAR_KINDS:
                raise ValueError(f"variable {j}: unknown kind {kind!r}")
            if kind == BINARY and (self.lp.lower[j] < 0 or self.lp.upper[j] > 1):
                raise ValueError(f"binary variable {j} has bounds outside [0, 1]")
            if kind != CONTINUOUS and not (np.isfinite(self.lp.lower[j]) and np.isfinite(self.lp.upper[j])):
                raise ValueError(f"integer variable {j} must have finite bounds")

    @property
    def integer_mask(self) -> np.ndarray:
        return np.array([k != CONTINUOUS for k in self.integrality], dtype=bool)


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray | None = None
    objective: float = float("nan")
    dual: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    nodes: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL
