"""Shared test utilities: brute-force oracles and random instance builders."""

from __future__ import annotations

from itertools import permutations

import numpy as np

from smtwt_aco.model import Instance, total_weighted_tardiness


def brute_force_best(instance: Instance) -> tuple[int, tuple[int, ...]]:
    """Exhaustive minimum over all n! schedules; keep n small."""
    best_twt = None
    best_order = None
    for order in permutations(range(instance.n)):
        twt = total_weighted_tardiness(instance, order)
        if best_twt is None or twt < best_twt:
            best_twt = twt
            best_order = order
    assert best_twt is not None and best_order is not None
    return best_twt, best_order


def random_instance(
    rng: np.random.Generator,
    n: int,
    p_max: int = 20,
    w_max: int = 10,
    tight: float = 0.5,
    id: str = "rand",
) -> Instance:
    """Quick random instance with due dates spread around a tightness knob."""
    p = rng.integers(1, p_max + 1, n)
    w = rng.integers(1, w_max + 1, n)
    total = int(p.sum())
    d = rng.integers(0, max(int(total * tight) + 1, 2), n)
    return Instance.from_arrays(p.tolist(), d.tolist(), w.tolist(), id=id)
