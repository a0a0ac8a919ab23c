#!/usr/bin/env python3
"""Compiled versus numpy kernels.

Times pivot, ratio_test and bellman_backup from both implementations on the
same inputs, then times full solves (MDP value iteration, an LP and a small
design MIP) in two subprocesses, one with ``MDPDESIGN_PURE_PYTHON=1``.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]
"""

import argparse
import csv
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from mdpdesign import _pykernels

try:
    from mdpdesign import _ckernels
except ImportError:
    _ckernels = None


def tableau(rng, m, n):
    T = rng.normal(size=(m + 1, n + 1))
    T[:m, -1] = np.abs(T[:m, -1])
    return np.ascontiguousarray(T)


def kernel_cases(rng):
    cases = []
    for m, n in [(20, 40), (100, 200), (400, 800)]:
        T = tableau(rng, m, n)
        basis = np.arange(n - m, n, dtype=np.int64)
        cases.append((f"pivot {m}x{n}", "pivot", (T, m // 2, 3)))
        cases.append((f"ratio_test {m}x{n}", "ratio_test", (T, 3, basis, m, 1e-9, False, 1e-9)))
    for S, A in [(10, 20), (100, 20), (400, 40)]:
        P = rng.random((S, A, S))
        P /= P.sum(axis=2, keepdims=True)
        C = rng.uniform(10, 40, (S, A))
        cases.append((f"bellman_backup S={S} A={A}", "bellman_backup", (P, C, rng.random(S), 0.9)))
    return cases


def time_kernel(module, name, args, repeat):
    fn = getattr(module, name)
    # pivot works in place, so each call gets a fresh copy of the tableau
    if name == "pivot":
        T0 = args[0]
        stmt = lambda: fn(T0.copy(), *args[1:])  # noqa: E731
    else:
        stmt = lambda: fn(*args)  # noqa: E731
    number = max(1, int(0.05 / max(timeit.timeit(stmt, number=1), 1e-7)))
    return min(timeit.repeat(stmt, number=number, repeat=repeat)) / number


SOLVE_SNIPPET = r"""
import json, sys, time
import numpy as np
from mdpdesign import kernels
from mdpdesign.generator import GenParams, generate_instance, random_instance
from mdpdesign.lp import solve_lp
from mdpdesign.mdp import build_dual_lp, value_iteration
from mdpdesign.reformulation import solve_integrated

repeat = int(sys.argv[1])
big = generate_instance(GenParams(n=8, m=4, K=2, S=60, A=10, seed=1))
sc, x = big.scenarios[0], np.zeros(big.design.n)
lp = build_dual_lp(sc, x)
mip = generate_instance(GenParams(n=8, m=4, K=2, S=8, A=4, seed=2))
work = {
    "value_iteration S=60 A=10": lambda: value_iteration(sc, x, eps=1e-10),
    "dual LP S=60 A=10": lambda: solve_lp(lp),
    "design MIP n=8 K=2 S=8 A=4": lambda: solve_integrated(mip),
    "oracle-check MIPs (10 small)": lambda: [solve_integrated(random_instance(s)) for s in range(10)],
}
out = {"backend": kernels.BACKEND}
for name, fn in work.items():
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def time_solves(pure, repeat):
    env = dict(os.environ)
    env.pop("MDPDESIGN_PURE_PYTHON", None)
    if pure:
        env["MDPDESIGN_PURE_PYTHON"] = "1"
    res = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args(argv)

    rows = []
    rng = np.random.default_rng(args.seed)
    for label, name, kargs in kernel_cases(rng):
        py = time_kernel(_pykernels, name, kargs, args.repeat)
        cy = time_kernel(_ckernels, name, kargs, args.repeat) if _ckernels else float("nan")
        rows.append((label, cy, py))

    fast = time_solves(False, args.repeat)
    slow = time_solves(True, args.repeat)
    if fast.pop("backend") != "cython":
        print("warning: compiled kernels not importable; both solve columns use numpy", file=sys.stderr)
    slow.pop("backend")
    rows += [(k, fast[k], slow[k]) for k in fast]

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'cython_us':>12}  {'python_us':>12}  {'speedup':>8}")
    for label, cy, py in rows:
        print(f"{label:<{width}}  {cy * 1e6:12.1f}  {py * 1e6:12.1f}  {py / cy:8.2f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case", "cython_s", "python_s", "speedup"])
            for label, cy, py in rows:
                w.writerow([label, f"{cy:.9f}", f"{py:.9f}", f"{py / cy:.3f}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
