import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from mdpdesign.lp import BINARY, CONTINUOUS, INTEGER, LpModel, MipModel, Relation, Status, get_engine, solve_mip


def _row_ok(model: LpModel, pts, tol=1e-9):
    act = pts @ model.A.T - model.rhs
    ok = np.ones(len(pts), dtype=bool)
    for i, rel in enumerate(model.relations):
        if rel is Relation.LE:
            ok &= act[:, i] <= tol
        elif rel is Relation.GE:
            ok &= act[:, i] >= -tol
        else:
            ok &= np.abs(act[:, i]) <= tol
    return ok


def exhaustive(mip: MipModel):
    """Best objective over every integer assignment, with an LP for the continuous part."""
    lp = mip.lp
    sign = 1.0 if lp.sense == "min" else -1.0
    ints = np.flatnonzero(mip.integer_mask)
    conts = np.flatnonzero(~mip.integer_mask)
    grids = [range(int(lp.lower[j]), int(lp.upper[j]) + 1) for j in ints]
    pts = np.array(list(itertools.product(*grids)), dtype=float).reshape(-1, len(ints))
    if conts.size == 0:
        ok = _row_ok(lp, pts)
        if not ok.any():
            return None
        return float(sign * np.min(sign * (pts[ok] @ lp.objective)))
    best = None
    for p in pts:
        rhs = lp.rhs - lp.A[:, ints] @ p
        Ac = lp.A[:, conts]
        le = [i for i, r in enumerate(lp.relations) if r is Relation.LE]
        ge = [i for i, r in enumerate(lp.relations) if r is Relation.GE]
        eq = [i for i, r in enumerate(lp.relations) if r is Relation.EQ]
        A_ub = np.vstack([Ac[le], -Ac[ge]]) if le or ge else None
        b_ub = np.concatenate([rhs[le], -rhs[ge]]) if le or ge else None
        res = linprog(sign * lp.objective[conts], A_ub=A_ub, b_ub=b_ub,
                      A_eq=Ac[eq] if eq else None, b_eq=rhs[eq] if eq else None,
                      bounds=list(zip(lp.lower[conts], lp.upper[conts])), method="highs")
        if res.status != 0:
            continue
        val = sign * res.fun + float(lp.objective[ints] @ p)
        if best is None or sign * val < sign * best:
            best = val
    return best


def random_mip(rng, n_int, n_cont=0, int_ub=1):
    n = n_int + n_cont
    m = int(rng.integers(1, 5))
    A = rng.integers(-3, 6, (m, n)).astype(float)
    rels = [Relation(r) for r in rng.choice(["<=", ">=", "="], m, p=[0.6, 0.3, 0.1])]
    x0 = np.concatenate([rng.integers(0, int_ub + 1, n_int), rng.random(n_cont) * 3])
    act = A @ x0
    rhs = np.array([a + (rng.integers(0, 4) if r is Relation.LE else -rng.integers(0, 4) if r is Relation.GE else 0)
                    for a, r in zip(act, rels)], dtype=float)
    lower = np.zeros(n)
    upper = np.concatenate([np.full(n_int, float(int_ub)), np.full(n_cont, 3.0)])
    kind = BINARY if int_ub == 1 else INTEGER
    lp = LpModel("min" if rng.random() < 0.5 else "max", rng.normal(size=n).round(3), A, rels, rhs, lower, upper)
    return MipModel(lp, [kind] * n_int + [CONTINUOUS] * n_cont)


def test_knapsack():
    lp = LpModel("max", [3.0, 2.0], [[1.0, 1.0]], ["<="], [1.0], [0, 0], [1, 1])
    res = solve_mip(MipModel(lp, [BINARY, BINARY]))
    assert res.status is Status.OPTIMAL
    assert res.objective == 3.0
    np.testing.assert_array_equal(res.x, [1.0, 0.0])


def test_integral_root_solves_at_one_node():
    lp = LpModel("min", [1.0, 2.0], [[1.0, 0.0], [0.0, 1.0]], [">=", ">="], [2.0, 1.0], [0, 0], [5, 5])
    res = solve_mip(MipModel(lp, [INTEGER, INTEGER]))
    assert res.nodes == 1
    np.testing.assert_array_equal(res.x, [2.0, 1.0])


def test_infeasible_mip():
    lp = LpModel("min", [1.0, 1.0], [[2.0, 2.0]], ["="], [1.0], [0, 0], [1, 1])
    assert solve_mip(MipModel(lp, [BINARY, BINARY])).status is Status.INFEASIBLE


def test_empty_integer_range_is_infeasible():
    lp = LpModel("min", [1.0], np.zeros((0, 1)), [], [], [0.2], [0.8])
    assert solve_mip(MipModel(lp, [INTEGER])).status is Status.INFEASIBLE


def test_node_limit_reports_status():
    rng = np.random.default_rng(3)
    n = 14
    w = rng.integers(5, 30, n).astype(float)
    lp = LpModel("max", w + rng.random(n), [w], ["<="], [w.sum() / 2 + 0.5], np.zeros(n), np.ones(n))
    res = solve_mip(MipModel(lp, [BINARY] * n), node_limit=3)
    assert res.status is Status.NODE_LIMIT
    assert res.nodes <= 3


def test_binary_bounds_validated():
    lp = LpModel("min", [1.0], np.zeros((0, 1)), [], [], [0.0], [2.0])
    with pytest.raises(ValueError):
        MipModel(lp, [BINARY])


@pytest.mark.parametrize("seed", range(60))
def test_binary_mip_matches_exhaustive(seed):
    rng = np.random.default_rng(1000 + seed)
    mip = random_mip(rng, n_int=int(rng.integers(1, 9)), n_cont=int(rng.integers(0, 3)))
    ref = exhaustive(mip)
    res = solve_mip(mip)
    if ref is None:
        assert res.status is Status.INFEASIBLE
        return
    assert res.status is Status.OPTIMAL
    assert res.objective == pytest.approx(ref, rel=1e-9, abs=1e-9)
    assert mip.lp.max_violation(res.x) <= 1e-7


@pytest.mark.parametrize("seed", range(15))
def test_twelve_integer_mip_matches_exhaustive(seed):
    rng = np.random.default_rng(2000 + seed)
    mip = random_mip(rng, n_int=12 if seed % 2 else 7, int_ub=1 if seed % 2 else 2)
    ref = exhaustive(mip)
    res = solve_mip(mip)
    if ref is None:
        assert res.status is Status.INFEASIBLE
    else:
        assert res.objective == pytest.approx(ref, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_highs_engine_agrees(seed):
    rng = np.random.default_rng(3000 + seed)
    mip = random_mip(rng, n_int=6, n_cont=2)
    a = solve_mip(mip)
    b = get_engine("highs").solve_mip(mip)
    assert a.status == b.status
    if a.optimal:
        assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-7)


def test_deterministic_node_counts():
    rng = np.random.default_rng(77)
    mip = random_mip(rng, n_int=8, n_cont=2)
    a, b = solve_mip(mip), solve_mip(mip)
    assert a.nodes == b.nodes and a.objective == b.objective
    assert np.array_equal(a.x, b.x)


def _two_binary_model():
    # min -x0 - x1 + 3 y  s.t.  x0 + x1 - y <= 1,  y continuous in [0, 1]
    lp = LpModel("min", [-1.0, -1.0, 3.0], [[1.0, 1.0, -1.0]], ["<="], [1.0], [0, 0, 0], [1, 1, 1])
    return MipModel(lp, [BINARY, BINARY, CONTINUOUS])


def test_completion_closes_fixed_nodes():
    mip = _two_binary_model()
    seen = []

    def complete(lo, up):
        seen.append((lo[0], lo[1]))
        x0, x1 = lo[0], lo[1]
        return np.array([x0, x1, max(0.0, x0 + x1 - 1.0)])

    res = solve_mip(mip, priority=[0, 1], completion=complete)
    ref = exhaustive(mip)
    assert res.status is Status.OPTIMAL
    assert res.objective == pytest.approx(ref)
    assert res.stats["completions"] == len(seen) > 0


def test_completion_rejected_when_infeasible():
    mip = _two_binary_model()

    def bogus(lo, up):
        return np.array([lo[0], lo[1], 0.0])  # violates the row at (1, 1)

    res = solve_mip(mip, priority=[0, 1], completion=bogus)
    assert res.objective == pytest.approx(exhaustive(mip))
    assert res.stats["completions"] < 4


def test_priority_must_be_integer():
    with pytest.raises(ValueError):
        solve_mip(_two_binary_model(), priority=[2])


@pytest.mark.parametrize("seed", range(30))
def test_priority_branching_matches_exhaustive(seed):
    rng = np.random.default_rng(7000 + seed)
    mip = random_mip(rng, 5, n_cont=2, int_ub=2)
    ref = exhaustive(mip)
    res = solve_mip(mip, priority=np.flatnonzero(mip.integer_mask)[:3])
    if ref is None:
        assert res.status is Status.INFEASIBLE
    else:
        assert res.objective == pytest.approx(ref, rel=1e-7, abs=1e-7)
