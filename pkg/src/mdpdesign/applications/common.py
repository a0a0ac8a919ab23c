"""Shared helpers for the application builders."""

from __future__ import annotations

import itertools
import json

import numpy as np

DEFAULT_STATE_CAP = 1024


class SizeError(ValueError):
    """The product state space of a configuration exceeds its cap."""


def load_config(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def check_cap(num_states: int, cap: int, what: str) -> None:
    if num_states > cap:
        raise SizeError(f"{what} has {num_states} states, above the cap of {cap}")


def product_space(dims):
    """All index tuples of a product space, first component slowest."""
    return list(itertools.product(*[range(d) for d in dims]))


def joint_transition(factors) -> np.ndarray:
    """Kronecker product of independent per-component transition rows."""
    out = np.ones(1)
    for row in factors:
        out = np.kron(out, row)
    return out


def scenario_probabilities(scenarios) -> list:
    q = [float(sc.get("probability", 1.0 / len(scenarios))) for sc in scenarios]
    total = sum(q)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"scenario probabilities sum to {total!r}, not 1")
    return q
