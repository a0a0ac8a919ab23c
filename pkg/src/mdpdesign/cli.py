"""Command-line entry point: ``mdpdesign <command> ...``.

Exit codes are shared by every command: 0 success, 2 input error,
3 infeasible, 4 big-M validity failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import bench
from .applications import BUILDERS, SizeError, load_config
from .design import objective_at
from .generator import GenParams, generate_instance
from .io import (
    SchemaError, dumps, instance_from_dict, instance_to_dict, instance_violations, is_solution, load_instance,
    read_json, solution_to_dict, solution_violations, write_text,
)
from .lp.backends import ENGINES
from .oracle import EnumerationSizeError, UnsupportedDesignError, brute_force_solve, enumerate_designs
from .reformulation import BigMError, BigMValidityError, export_bilevel, export_lp, solve_integrated

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_BIGM = 4

BIGM_FLAGS = {"uniform": "uniform", "per-state-lp": "per_state_lp"}


class InputError(Exception):
    """Bad user input; reported on stderr with exit code 2."""


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_text(out, text)


def _load(path):
    try:
        return load_instance(path)
    except SchemaError as exc:
        raise InputError("instance failed validation:\n  " + "\n  ".join(exc.violations)) from None
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _summary(inst) -> str:
    d = inst.dims()
    return " ".join(f"{k}={v}" for k, v in d.items())


def cmd_generate(args) -> int:
    try:
        params = GenParams(n=args.n, m=args.m, K=args.K, S=args.S, A=args.A, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    inst = generate_instance(params)
    _emit(dumps(instance_to_dict(inst)), args.out)
    print(f"generated {_summary(inst)} seed={args.seed}", file=sys.stderr)
    return EXIT_OK


def cmd_build(args) -> int:
    try:
        inst = BUILDERS[args.application](load_config(args.config))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {args.config}: {exc}") from None
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        kind = "size" if isinstance(exc, SizeError) else "config"
        raise InputError(f"{kind} error: {exc}") from None
    _emit(dumps(instance_to_dict(inst)), args.out)
    print(f"built {args.application} instance {_summary(inst)}", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    try:
        if args.method == "oracle":
            sol = brute_force_solve(inst, cap=args.cap)
        else:
            sol = solve_integrated(inst, BIGM_FLAGS[args.bigm], engine=args.engine,
                                   node_limit=args.node_limit, structured=not args.plain)
    except BigMValidityError as exc:
        print(f"big-M validity failure: {exc}", file=sys.stderr)
        return EXIT_BIGM
    except (BigMError, UnsupportedDesignError, EnumerationSizeError) as exc:
        raise InputError(str(exc)) from None
    _emit(dumps(solution_to_dict(sol, args.instance)), args.out)
    if sol.status == "optimal":
        print(f"optimal objective {sol.objective!r} x={[float(v) for v in sol.x]}", file=sys.stderr)
        return EXIT_OK
    print(f"status: {sol.status}", file=sys.stderr)
    return EXIT_INFEASIBLE if sol.status == "infeasible" else EXIT_INPUT


def cmd_enumerate(args) -> int:
    inst = _load(args.instance)
    lines = []
    best = None
    try:
        for x in enumerate_designs(inst.design, args.cap):
            obj, _ = objective_at(inst, x)
            lines.append({"x": [float(v) for v in x], "objective": obj})
            if best is None or obj < best["objective"] - 1e-12 * max(1.0, abs(best["objective"])):
                best = lines[-1]
    except (UnsupportedDesignError, EnumerationSizeError) as exc:
        raise InputError(str(exc)) from None
    _emit("".join(json.dumps(r) + "\n" for r in lines), args.out)
    if best is None:
        print("no feasible design", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"{len(lines)} feasible designs; best objective {best['objective']!r} at x={best['x']}",
          file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        grid = bench.table1_grid(args.scale) if args.grid == "table1" else bench.load_grid(args.grid)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"bad grid: {exc}") from None
    if args.reps < 1:
        raise InputError("--reps must be at least 1")
    out = Path(args.out)
    summary_path = Path(args.summary) if args.summary else out.with_name(out.stem + "_summary.csv")

    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=bench.FIELDS, lineterminator="\n")
        writer.writeheader()

        def on_record(rec):
            writer.writerow({k: rec[k] for k in bench.FIELDS})
            fh.flush()

        records = bench.run_sweep(grid, args.reps, args.seed, args.method, BIGM_FLAGS[args.bigm],
                                  args.engine, args.node_limit, args.workers, on_record)
    summary = bench.summarize(grid, records, args.reps)
    write_text(summary_path, bench.to_csv(summary, bench.SUMMARY_FIELDS))
    trends = bench.trend_report(summary)
    for block, info in trends.items():
        times = ", ".join(f"{t:.1f}" for t in info["mean_solve_ms"])
        flag = "non-decreasing" if info["non_decreasing"] else "not monotone"
        print(f"{block:>2} {info['values']}: mean ms [{times}] ({flag})", file=sys.stderr)
    failed = sum(r["status"] != "optimal" for r in records)
    print(f"{len(records)} runs, {failed} not optimal; runs -> {out}, summary -> {summary_path}",
          file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        data = read_json(args.file)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {args.file}: {exc}") from None
    if is_solution(data):
        inst_path = args.instance or data.get("instance")
        if not inst_path:
            raise InputError("solution file names no instance; pass --instance")
        if not args.instance and not os.path.isabs(inst_path) and not os.path.exists(inst_path):
            inst_path = os.path.join(os.path.dirname(args.file), inst_path)
        problems = solution_violations(data, _load(inst_path), tol=args.tol)
        what = "solution"
    else:
        problems = instance_violations(data)
        if not problems:
            instance_from_dict(data)
        what = "instance"
    if problems:
        print(f"{what} {args.file}: {len(problems)} violation(s)", file=sys.stderr)
        for p in problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_INPUT
    print(f"{what} {args.file}: ok")
    return EXIT_OK


def cmd_export(args) -> int:
    inst = _load(args.instance)
    try:
        if args.lp:
            export_lp(inst, args.lp, BIGM_FLAGS[args.bigm])
        if args.bilevel:
            export_bilevel(inst, args.bilevel)
    except BigMError as exc:
        raise InputError(str(exc)) from None
    if not (args.lp or args.bilevel):
        raise InputError("nothing to export; pass --lp and/or --bilevel")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdpdesign", description="Integrated design and MDP operations.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="random instance following the published protocol")
    for flag in ("n", "m", "K", "S", "A"):
        g.add_argument(f"-{flag}", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", "-o", default="-")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("build", help="instance from an application config")
    b.add_argument("application", choices=sorted(BUILDERS))
    b.add_argument("config")
    b.add_argument("--out", "-o", default="-")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("instance")
    s.add_argument("--method", choices=["mip", "oracle"], default="mip")
    s.add_argument("--bigm", choices=sorted(BIGM_FLAGS), default="uniform")
    s.add_argument("--engine", choices=sorted(ENGINES), default="internal")
    s.add_argument("--node-limit", type=int, default=1_000_000)
    s.add_argument("--plain", action="store_true", help="plain most-fractional branching, no MDP completion")
    s.add_argument("--cap", type=int, default=1_000_000, help="enumeration cap for --method oracle")
    s.add_argument("--out", "-o", default="-")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("enumerate", help="every feasible design with its objective (JSON lines)")
    e.add_argument("instance")
    e.add_argument("--cap", type=int, default=1_000_000)
    e.add_argument("--out", "-o", default="-")
    e.set_defaults(func=cmd_enumerate)

    r = sub.add_parser("bench", help="benchmark sweep over generated instances")
    r.add_argument("--grid", default="table1", help="'table1' or a JSON grid file")
    r.add_argument("--scale", choices=["desk", "published"], default="desk")
    r.add_argument("--reps", type=int, default=5)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--method", choices=["mip", "oracle"], default="mip")
    r.add_argument("--bigm", choices=sorted(BIGM_FLAGS), default="uniform")
    r.add_argument("--engine", choices=sorted(ENGINES), default="internal")
    r.add_argument("--node-limit", type=int, default=100_000)
    r.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${bench.WORKERS_ENV} or 1)")
    r.add_argument("--out", "-o", default="bench.csv")
    r.add_argument("--summary", default=None)
    r.set_defaults(func=cmd_bench)

    v = sub.add_parser("validate", help="check an instance or solution file")
    v.add_argument("file")
    v.add_argument("--instance", default=None, help="instance for a solution file")
    v.add_argument("--tol", type=float, default=1e-6)
    v.set_defaults(func=cmd_validate)

    x = sub.add_parser("export", help="write the single-level MIP or the bilevel form")
    x.add_argument("instance")
    x.add_argument("--lp", default=None, help="LP-format file for the big-M MIP")
    x.add_argument("--bigm", choices=sorted(BIGM_FLAGS), default="uniform")
    x.add_argument("--bilevel", default=None, help="directory for the bilevel files")
    x.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with 2 already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
