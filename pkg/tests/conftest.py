import numpy as np
import pytest

from mdpdesign.lp import LpModel, Relation


def kkt_report(model: LpModel, res):
    """Primal, dual and complementarity residuals of an optimal LP result."""
    x, y, rc = res.x, res.dual, res.reduced_costs
    sense = 1.0 if model.sense == "min" else -1.0
    scale = 1.0 + np.max(np.abs(model.rhs), initial=0.0)
    primal = model.max_violation(x) / scale

    dual = 0.0
    act = model.A @ x - model.rhs
    cs = 0.0
    for i, rel in enumerate(model.relations):
        yi = sense * y[i]  # sign as in a min problem
        if rel is Relation.LE:
            dual = max(dual, yi)
        elif rel is Relation.GE:
            dual = max(dual, -yi)
        cs = max(cs, abs(y[i] * act[i]))
    for j in range(model.num_vars):
        r = sense * rc[j]
        at_lo = np.isfinite(model.lower[j]) and abs(x[j] - model.lower[j]) <= 1e-9 * (1 + abs(x[j]))
        at_up = np.isfinite(model.upper[j]) and abs(x[j] - model.upper[j]) <= 1e-9 * (1 + abs(x[j]))
        if at_lo and at_up:
            continue
        if at_lo:
            dual = max(dual, -r)
        elif at_up:
            dual = max(dual, r)
        else:
            dual = max(dual, abs(r))
    bound_term = 0.0
    for j in range(model.num_vars):
        if rc[j] != 0.0:
            bound_term += rc[j] * x[j]
    dual_obj = float(y @ model.rhs) + bound_term + model.objective_constant
    gap = abs(dual_obj - res.objective) / (1.0 + abs(res.objective))
    return {"primal": primal, "dual": dual, "cs": cs, "gap": gap}


def random_lp(rng, m=None, n=None, bounded=True):
    m = int(rng.integers(1, 7)) if m is None else m
    n = int(rng.integers(1, 8)) if n is None else n
    A = rng.normal(size=(m, n)).round(2)
    A[rng.random(A.shape) < 0.25] = 0.0
    kinds = rng.integers(0, 4, n)
    lower = np.where(kinds == 1, -np.inf, np.where(kinds == 3, -1.0, 0.0))
    upper = np.where(kinds >= 2, 3.0, np.inf)
    if bounded:
        lower = np.where(np.isfinite(lower), lower, -5.0)
        upper = np.where(np.isfinite(upper), upper, 5.0)
    x0 = np.clip(rng.normal(size=n), np.where(np.isfinite(lower), lower, -2), np.where(np.isfinite(upper), upper, 2))
    rels = [Relation(r) for r in rng.choice(["<=", ">=", "="], m, p=[0.5, 0.3, 0.2])]
    act = A @ x0
    rhs = np.array([a + (1.0 if r is Relation.LE else -1.0 if r is Relation.GE else 0.0) * rng.random()
                    for a, r in zip(act, rels)])
    sense = "min" if rng.random() < 0.5 else "max"
    return LpModel(sense, rng.normal(size=n).round(2), A, rels, rhs, lower, upper)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_mdp(rng, S=None, A=None, n=3, discount=None, probability=1.0, sparsity=0.0):
    from mdpdesign.mdp import ScenarioMdp

    S = int(rng.integers(1, 11)) if S is None else S
    A = int(rng.integers(1, 6)) if A is None else A
    P = rng.random((S, A, S))
    if sparsity:
        P[rng.random(P.shape) < sparsity] = 0.0
        P[np.arange(S)[:, None], np.arange(A)[None, :], rng.integers(0, S, (S, A))] += 0.1
    P /= P.sum(axis=2, keepdims=True)
    F = rng.uniform(-1.0, 1.0, (S, A, n))
    G = rng.uniform(-5.0, 40.0, (S, A))
    alpha = rng.random(S) + 0.01
    alpha /= alpha.sum()
    lam = rng.uniform(0.5, 0.97) if discount is None else discount
    return ScenarioMdp(P, F, G, alpha, lam, probability)


def truncated_value(P, h, lam, steps):
    """sum_{t < steps} lam^t P^t h by repeated multiplication."""
    v = np.zeros_like(h)
    term = h.copy()
    for _ in range(steps):
        v += term
        term = lam * (P @ term)
    return v
