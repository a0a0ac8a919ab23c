"""Seeded random instances.

:func:`generate_instance` follows the published experimental protocol:

==============================  ==================================
quantity                        distribution
==============================  ==================================
integer variable upper bound    Normal(12, 1), rounded, floored at 1
leader row coefficient          Normal(12, 0.5)
leader row upper bound          Normal(b, b/6), b = n / (12 + 2*0.5)
scenario relative probability   Normal(1, 0.2)
initial-state relative prob.    Normal(1, 0.2)
transition relative prob.       Normal(1, 0.4)
discount factor                 Uniform[0.92, 0.97]
design cost                     Uniform[10, 100]
cost sensitivity f              Uniform[-1, 1]
cost constant g                 Uniform[10, 40]
==============================  ==================================

The second normal parameter is a standard deviation. Relative probabilities
are clamped below at 0.01 before normalising so every vector keeps full
support. Half of the design variables are binary (listed first), half are
general integers; all lower bounds are 0.

Random streams (scheme ``philox-v1``): every draw comes from
``numpy.random.Generator(Philox(SeedSequence(seed, spawn_key=key)))`` with

* ``key = (0,)`` for the design block (bounds, rows, costs, scenario weights),
* ``key = (1, k)`` for scenario ``k`` (discount, initial distribution),
* the state-action pair ``(s, a)`` of scenario ``k`` (transition row, then
  ``f``, then ``g``) draws from ``Philox`` keyed by
  ``SeedSequence(seed, spawn_key=(2, k)).generate_state(2, uint64)`` with the
  256-bit counter started at ``[0, 0, s, a]``; the low two words count draws,
  so pairs never share counter values,

so each block is reproducible independently of the others. Keying the pair
streams by counter rather than by seed sequence avoids hashing a seed per pair.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .design import DesignMdpInstance, DesignSpace
from .lp.model import BINARY, INTEGER, Relation
from .mdp import ScenarioMdp

RNG_SCHEME = "philox-v1"

COEF_MEAN, COEF_SD = 12.0, 0.5
BOUND_MEAN, BOUND_SD = 12.0, 1.0
SCEN_SD, INIT_SD, TRANS_SD = 0.2, 0.2, 0.4
PROB_FLOOR = 0.01
DISCOUNT_RANGE = (0.92, 0.97)
DESIGN_COST_RANGE = (10.0, 100.0)
F_RANGE = (-1.0, 1.0)
G_RANGE = (10.0, 40.0)


def _seed_sequence(seed: int, key) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, key)))


class PairStreams:
    """Per state-action streams of one scenario, sharing a Philox key."""

    def __init__(self, seed: int, k: int):
        self.key = _seed_sequence(seed, (2, k)).generate_state(2, np.uint64)
        self.bitgen = np.random.Philox(key=self.key)
        self.rng = np.random.Generator(self.bitgen)
        self._buffer = np.zeros(4, dtype=np.uint64)

    def at(self, s: int, a: int) -> np.random.Generator:
        self.bitgen.state = {
            "bit_generator": "Philox",
            "state": {"counter": np.array([0, 0, s, a], dtype=np.uint64), "key": self.key},
            "buffer": self._buffer, "buffer_pos": 4, "has_uint32": 0, "uinteger": 0,
        }
        return self.rng


@dataclass(frozen=True)
class GenParams:
    n: int
    m: int
    K: int
    S: int
    A: int
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "m", "K", "S", "A"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.n % 2:
            raise ValueError(f"n must be even to split evenly into binary and integer variables, got {self.n}")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    def as_dict(self) -> dict:
        return asdict(self)


def rhs_mean(n: int) -> float:
    return n / (COEF_MEAN + 2 * COEF_SD)


def relative_probabilities(rng: np.random.Generator, size, sd: float) -> np.ndarray:
    w = np.maximum(rng.normal(1.0, sd, size), PROB_FLOOR)
    return w / w.sum()


def generate_instance(params: GenParams) -> DesignMdpInstance:
    n, m, K, S, A = params.n, params.m, params.K, params.S, params.A
    half = n // 2
    rng = stream(params.seed, 0)
    int_ub = np.maximum(1.0, np.round(rng.normal(BOUND_MEAN, BOUND_SD, half)))
    upper = np.concatenate([np.ones(half), int_ub])
    lower = np.zeros(n)
    kinds = [BINARY] * half + [INTEGER] * half
    coef = rng.normal(COEF_MEAN, COEF_SD, (m, n))
    b = rhs_mean(n)
    rhs = rng.normal(b, b / 6.0, m)
    design_cost = rng.uniform(*DESIGN_COST_RANGE, n)
    q = relative_probabilities(rng, K, SCEN_SD)
    design = DesignSpace(lower, upper, kinds, coef, [Relation.LE] * m, rhs)

    scenarios = []
    for k in range(K):
        srng = stream(params.seed, 1, k)
        pairs = PairStreams(params.seed, k)
        lam = srng.uniform(*DISCOUNT_RANGE)
        alpha = relative_probabilities(srng, S, INIT_SD)
        P = np.empty((S, A, S))
        F = np.empty((S, A, n))
        G = np.empty((S, A))
        for s in range(S):
            for a in range(A):
                prng = pairs.at(s, a)
                P[s, a] = relative_probabilities(prng, S, TRANS_SD)
                F[s, a] = prng.uniform(*F_RANGE, n)
                G[s, a] = prng.uniform(*G_RANGE)
        scenarios.append(ScenarioMdp(P, F, G, alpha, lam, q[k]))
    return DesignMdpInstance(design, design_cost, scenarios)


def random_instance(seed: int, *, n_max: int = 6, K_max: int = 3, S_max: int = 4, A_max: int = 3,
                    max_rows: int = 2, sparsity: float = 0.3) -> DesignMdpInstance:
    """Small all-binary instance for oracle comparisons.

    Dimensions are drawn uniformly up to the given maxima. Leader rows are
    built around a random reference design so the feasible set is never
    empty. Transition rows drop entries with probability ``sparsity`` (at
    least one entry survives), which makes reachability state-dependent.
    Design costs and cost sensitivities are scaled so that operational
    savings can pay for a design choice, unlike the protocol ranges above.
    """
    rng = stream(seed, 3)
    n = int(rng.integers(1, n_max + 1))
    K = int(rng.integers(1, K_max + 1))
    m = int(rng.integers(0, max_rows + 1))
    ref = rng.integers(0, 2, n).astype(float)
    A_rows = rng.integers(0, 4, (m, n)).astype(float)
    rels, rhs = [], []
    for i in range(m):
        act = float(A_rows[i] @ ref)
        if rng.random() < 0.5:
            rels.append(Relation.LE)
            rhs.append(act + float(rng.integers(0, 2)))
        else:
            rels.append(Relation.GE)
            rhs.append(act - float(rng.integers(0, 2)))
    design = DesignSpace(np.zeros(n), np.ones(n), [BINARY] * n, A_rows, rels, rhs)
    c = rng.uniform(0.0, 40.0, n)
    q = relative_probabilities(rng, K, SCEN_SD)
    scenarios = []
    for k in range(K):
        S = int(rng.integers(1, S_max + 1))
        A = int(rng.integers(1, A_max + 1))
        P = np.maximum(rng.normal(1.0, TRANS_SD, (S, A, S)), PROB_FLOOR)
        drop = rng.random((S, A, S)) < sparsity
        keep_one = rng.integers(0, S, (S, A))
        drop[np.arange(S)[:, None], np.arange(A)[None, :], keep_one] = False
        P[drop] = 0.0
        P /= P.sum(axis=2, keepdims=True)
        F = rng.uniform(-3.0, 1.0, (S, A, n))
        G = rng.uniform(*G_RANGE, (S, A))
        alpha = relative_probabilities(rng, S, INIT_SD)
        lam = rng.uniform(*DISCOUNT_RANGE)
        scenarios.append(ScenarioMdp(P, F, G, alpha, lam, q[k]))
    return DesignMdpInstance(design, c, scenarios)
