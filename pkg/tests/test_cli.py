import csv
import json
from pathlib import Path

import numpy as np
import pytest

from mdpdesign.cli import EXIT_BIGM, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, main
from mdpdesign.generator import random_instance
from mdpdesign.io import instance_to_dict, save_instance
from mdpdesign.lp import SolverEngine, register_engine, solve_mip
from mdpdesign.lp.backends import ENGINES

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(*argv):
    return main([str(a) for a in argv])


def read(path):
    return json.loads(Path(path).read_text())


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.json"
    save_instance(random_instance(33), path)
    return path


def test_generate_first_published_row(tmp_path):
    out = tmp_path / "g.json"
    assert run("generate", "-n", 20, "-m", 40, "-K", 20, "-S", 10, "-A", 20, "--seed", 1, "--out", out) == EXIT_OK
    d = read(out)
    assert d["n2"] == 20 and len(d["constraints"]) == 40 and len(d["scenarios"]) == 20
    assert d["scenarios"][0]["num_states"] == 10 and d["scenarios"][0]["num_actions"] == 20


def test_generate_byte_identical(tmp_path):
    args = ["generate", "-n", 4, "-m", 2, "-K", 2, "-S", 3, "-A", 2, "--seed", 9]
    run(*args, "--out", tmp_path / "a.json")
    run(*args, "--out", tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_generate_odd_n(capsys):
    assert run("generate", "-n", 21, "-m", 2, "-K", 1, "-S", 2, "-A", 2) == EXIT_INPUT
    assert "even" in capsys.readouterr().err


def test_generate_to_stdout(capsys):
    assert run("generate", "-n", 2, "-m", 1, "-K", 1, "-S", 2, "-A", 1) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["version"] == 1


def test_solve_methods_agree(tmp_path, small):
    for method in ("mip", "oracle"):
        assert run("solve", small, "--method", method, "--out", tmp_path / f"{method}.json") == EXIT_OK
    mip, ora = read(tmp_path / "mip.json"), read(tmp_path / "oracle.json")
    assert mip["objective"] == pytest.approx(ora["objective"], rel=1e-6)
    assert mip["method"] == "mip_reformulation" and ora["method"] == "enumeration"
    assert len(mip["per_scenario"]) == len(ora["per_scenario"])
    assert run("solve", small, "--bigm", "per-state-lp", "--plain", "--out", tmp_path / "p.json") == EXIT_OK
    assert read(tmp_path / "p.json")["objective"] == pytest.approx(ora["objective"], rel=1e-6)


def test_solve_infeasible_exit_3(tmp_path):
    d = instance_to_dict(random_instance(33))
    d["constraints"] = [{"coeffs": [1.0] * len(d["bounds"]), "rel": ">=", "rhs": len(d["bounds"]) + 1.0}]
    path = tmp_path / "inf.json"
    path.write_text(json.dumps(d))
    for method in ("mip", "oracle"):
        assert run("solve", path, "--method", method, "--out", tmp_path / "s.json") == EXIT_INFEASIBLE
        assert read(tmp_path / "s.json")["status"] == "infeasible"


def test_solve_single_feasible_design(tmp_path):
    # the published protocol's rows leave only the zero design at this size
    inst = tmp_path / "g.json"
    run("generate", "-n", 4, "-m", 2, "-K", 2, "-S", 2, "-A", 2, "--seed", 3, "--out", inst)
    assert run("enumerate", inst, "--out", tmp_path / "e.jsonl") == EXIT_OK
    designs = [json.loads(line) for line in (tmp_path / "e.jsonl").read_text().splitlines()]
    assert len(designs) == 1
    run("solve", inst, "--out", tmp_path / "s.json")
    assert read(tmp_path / "s.json")["x"] == designs[0]["x"]


def test_solve_schema_error_lists_violation(tmp_path, capsys):
    d = instance_to_dict(random_instance(33))
    d["scenarios"][0]["discount"] = 1.5
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    assert run("solve", path) == EXIT_INPUT
    assert "discount" in capsys.readouterr().err


def test_solve_unreadable(tmp_path):
    assert run("solve", tmp_path / "missing.json") == EXIT_INPUT
    (tmp_path / "junk.json").write_text("{not json")
    assert run("solve", tmp_path / "junk.json") == EXIT_INPUT


def test_bigm_failure_exit_4(tmp_path, small):
    def bad_mip(model, **kw):
        res = solve_mip(model, **kw)
        res.objective += 1.0
        return res

    register_engine(SolverEngine("corrupt", None, bad_mip))
    try:
        assert run("solve", small, "--engine", "corrupt", "--out", tmp_path / "s.json") == EXIT_BIGM
    finally:
        ENGINES.pop("corrupt", None)


def test_validate_instance_and_solution(tmp_path, small, capsys):
    assert run("validate", small) == EXIT_OK
    sol = tmp_path / "s.json"
    run("solve", small, "--out", sol)
    assert run("validate", sol) == EXIT_OK
    d = read(sol)
    d["objective"] += 1.0
    sol.write_text(json.dumps(d))
    capsys.readouterr()
    assert run("validate", sol, "--instance", small) == EXIT_INPUT
    assert "objective" in capsys.readouterr().err


def test_validate_bad_transition_row(tmp_path, capsys):
    d = instance_to_dict(random_instance(33))
    row = d["scenarios"][0]["transition"][0][0]
    d["scenarios"][0]["transition"][0][0] = [p * 0.9 for p in row]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    assert run("validate", path) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "scenarios[0]" in err and "violation" in err


def test_validate_solution_without_instance(tmp_path, small):
    sol = tmp_path / "s.json"
    run("solve", small, "--out", sol)
    d = read(sol)
    d["instance"] = None
    sol.write_text(json.dumps(d))
    assert run("validate", sol) == EXIT_INPUT


def test_build_and_solve_application(tmp_path):
    out = tmp_path / "q.json"
    assert run("build", "queue", CONFIGS / "queue.json", "--out", out) == EXIT_OK
    assert run("solve", out, "--out", tmp_path / "s.json") == EXIT_OK
    assert run("solve", out, "--method", "oracle", "--out", tmp_path / "o.json") == EXIT_OK
    assert read(tmp_path / "s.json")["objective"] == pytest.approx(read(tmp_path / "o.json")["objective"], rel=1e-6)


def test_build_errors(tmp_path):
    cfg = json.loads((CONFIGS / "reliability.json").read_text())
    cfg["state_cap"] = 4
    path = tmp_path / "r.json"
    path.write_text(json.dumps(cfg))
    assert run("build", "reliability", path) == EXIT_INPUT
    assert run("build", "inventory", tmp_path / "missing.json") == EXIT_INPUT
    del cfg["budget"]
    cfg.pop("state_cap")
    path.write_text(json.dumps(cfg))
    assert run("build", "reliability", path) == EXIT_INPUT


def test_export(tmp_path, small):
    assert run("export", small, "--lp", tmp_path / "m.lp", "--bilevel", tmp_path / "bl") == EXIT_OK
    assert "Minimize" in (tmp_path / "m.lp").read_text()
    assert (tmp_path / "bl" / "manifest.json").exists()
    assert run("export", small) == EXIT_INPUT


def test_enumerate_rejects_continuous(tmp_path):
    d = instance_to_dict(random_instance(33))
    d["integrality"][0] = "continuous"
    d["n1"], d["n2"] = 1, d["n2"] - 1
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d))
    assert run("enumerate", path) == EXIT_INPUT
    assert run("solve", path, "--method", "oracle") == EXIT_INPUT


def test_unknown_command_and_usage():
    assert run("frobnicate") == EXIT_INPUT
    assert run("solve", "x.json", "--method", "magic") == EXIT_INPUT


def _bench_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_bench_custom_grid_deterministic(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"base": {"n": 2, "m": 1, "K": 1, "S": 2, "A": 2},
                                "blocks": {"S": [2, 3], "K": [1, 2]}}))
    for name in ("a", "b"):
        assert run("bench", "--grid", grid, "--reps", 1, "--seed", 7, "--out", tmp_path / f"{name}.csv") == EXIT_OK
    a, b = _bench_rows(tmp_path / "a.csv"), _bench_rows(tmp_path / "b.csv")
    assert list(a[0]) == ["n", "m", "K", "S", "A", "rep", "seed", "method", "status", "objective", "solve_ms", "nodes"]
    for ra, rb in zip(a, b):
        ra.pop("solve_ms"), rb.pop("solve_ms")
    assert a == b and len(a) == 4
    summary = _bench_rows(tmp_path / "a_summary.csv")
    assert [r["block"] for r in summary] == ["K", "K", "S", "S"]


def test_bench_records_failures(tmp_path):
    grid = tmp_path / "grid.json"
    # odd n cannot be generated; the run is recorded and the sweep continues
    grid.write_text(json.dumps({"rows": [{"n": 3, "m": 1, "K": 1, "S": 2, "A": 1},
                                         {"n": 2, "m": 1, "K": 1, "S": 2, "A": 1}]}))
    assert run("bench", "--grid", grid, "--reps", 2, "--out", tmp_path / "r.csv") == EXIT_OK
    rows = _bench_rows(tmp_path / "r.csv")
    assert [r["status"] for r in rows] == ["error:ValueError"] * 2 + ["optimal"] * 2


def test_bench_node_limit_status(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"rows": [{"n": 4, "m": 1, "K": 1, "S": 2, "A": 2}]}))
    assert run("bench", "--grid", grid, "--reps", 1, "--node-limit", 1, "--out", tmp_path / "r.csv") == EXIT_OK
    assert _bench_rows(tmp_path / "r.csv")[0]["status"] == "node_limit"


def test_bench_bad_grid(tmp_path):
    assert run("bench", "--grid", tmp_path / "nope.json", "--out", tmp_path / "r.csv") == EXIT_INPUT
    assert run("bench", "--reps", 0, "--out", tmp_path / "r.csv") == EXIT_INPUT


def test_bench_worker_pool_matches_serial(tmp_path, monkeypatch):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"base": {"n": 2, "m": 1, "K": 1, "S": 2, "A": 2}, "blocks": {"A": [1, 2, 3]}}))
    run("bench", "--grid", grid, "--reps", 2, "--seed", 1, "--out", tmp_path / "s.csv")
    monkeypatch.setenv("MDPDESIGN_WORKERS", "2")
    run("bench", "--grid", grid, "--reps", 2, "--seed", 1, "--out", tmp_path / "p.csv")
    s, p = _bench_rows(tmp_path / "s.csv"), _bench_rows(tmp_path / "p.csv")
    strip = lambda rows: [{k: v for k, v in r.items() if k != "solve_ms"} for r in rows]  # noqa: E731
    assert strip(s) == strip(p)
    assert np.all([r["status"] == "optimal" for r in s])
