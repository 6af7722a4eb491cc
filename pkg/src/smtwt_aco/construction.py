"""Ant solution construction for position-by-position scheduling.

Two decision rules: "plain" scores a job at position i by tau[i, j], while
"summation" scores it by the running sum of tau over rows 0..i, which lets
earlier rows keep pulling a job toward the front. Both are combined with a
heuristic desirability (EDD or MDD) as tau_term^alpha * eta^beta, and the
next job is either the argmax (with probability q0) or sampled
proportionally.

``construct_schedule`` runs a compiled kernel; ``ConstructionState`` with
``select_next`` is the readable step-by-step equivalent. Both consume
exactly two uniforms per position from the supplied generator and produce
bitwise-identical schedules for the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .model import Instance, Schedule
from .pheromone import PheromoneSource

RULE_PLAIN = "plain"
RULE_SUMMATION = "summation"
HEURISTIC_EDD = "edd"
HEURISTIC_MDD = "mdd"


@dataclass(frozen=True)
class ConstructionPolicy:
    """How ants weigh pheromone against the dispatch heuristic."""

    rule: str = RULE_SUMMATION
    heuristic: str = HEURISTIC_MDD
    alpha: float = 1.0
    beta: float = 2.0
    q0: float = 0.1

    def __post_init__(self) -> None:
        if self.rule not in (RULE_PLAIN, RULE_SUMMATION):
            raise ValueError(f"rule must be 'plain' or 'summation', got {self.rule!r}")
        if self.heuristic not in (HEURISTIC_EDD, HEURISTIC_MDD):
            raise ValueError(f"heuristic must be 'edd' or 'mdd', got {self.heuristic!r}")
        if not 0.0 <= self.q0 < 1.0:
            raise ValueError(f"q0 must be in [0, 1), got {self.q0}")


def _pow_fast(x: float, e: float) -> float:
    # keep in sync with the kernel's exponent fast paths
    if e == 1.0:
        return x
    if e == 2.0:
        return x * x
    return math.pow(x, e)


@dataclass(frozen=True)
class InstanceArrays:
    """Float views of an instance, shared across many constructions."""

    p: np.ndarray
    d: np.ndarray
    w: np.ndarray
    eta_due: np.ndarray

    @classmethod
    def build(cls, instance: Instance) -> "InstanceArrays":
        p = instance.processing_times.astype(np.float64)
        d = instance.due_dates.astype(np.float64)
        w = instance.weights.astype(np.float64)
        eta_due = 1.0 / np.maximum(d, 1.0)
        return cls(p=p, d=d, w=w, eta_due=eta_due)


class ConstructionState:
    """Partial schedule plus the running sums the summation rule needs."""

    def __init__(self, instance: Instance, policy: ConstructionPolicy, source: PheromoneSource):
        self.instance = instance
        self.policy = policy
        self.source = source
        n = instance.n
        self.scheduled = [False] * n
        self.order: list[int] = []
        self.elapsed = 0
        self.prefix = np.zeros(n, dtype=np.float64)
        self._rows_added = 0

    @property
    def position(self) -> int:
        """Index of the position currently being filled (0-based)."""
        return len(self.order)

    @property
    def unscheduled(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.instance.n) if not self.scheduled[j])

    def _ensure_row(self) -> None:
        # the summation rule includes the current row in its prefix sums
        if self.policy.rule == RULE_SUMMATION and self._rows_added == self.position:
            i = self.position
            for j in range(self.instance.n):
                self.prefix[j] += self.source.tau(i, j)
            self._rows_added += 1

    def _eta(self, job: int) -> float:
        jb = self.instance.jobs[job]
        if self.policy.heuristic == HEURISTIC_MDD:
            completion = self.elapsed + jb.processing_time
            return 1.0 / (max(completion, jb.due_date) - self.elapsed)
        return 1.0 / max(jb.due_date, 1)

    def desirability(self, job: int) -> float:
        """Score of placing ``job`` at the current position; always > 0."""
        if self.scheduled[job]:
            raise ValueError(f"job {job} is already scheduled")
        self._ensure_row()
        if self.policy.rule == RULE_SUMMATION:
            t = float(self.prefix[job])
        else:
            t = self.source.tau(self.position, job)
        return _pow_fast(t, self.policy.alpha) * _pow_fast(self._eta(job), self.policy.beta)

    def selection_probabilities(self) -> np.ndarray:
        """Length-n vector: normalized desirabilities, zero once scheduled."""
        probs = np.zeros(self.instance.n, dtype=np.float64)
        total = 0.0
        for j in range(self.instance.n):
            if self.scheduled[j]:
                continue
            v = self.desirability(j)
            probs[j] = v
            total += v
        if total <= 0.0:
            raise ValueError("no positive desirability among unscheduled jobs")
        return probs / total

    def select_next(self, rng: np.random.Generator) -> int:
        """Pick the next job: argmax with probability q0, else proportional.

        Consumes exactly two uniforms per call so that seeded runs replay
        identically whichever branch they take; ties among maximizers break
        uniformly at random.
        """
        self._ensure_row()
        n = self.instance.n
        u_rule = rng.random()
        u_sel = rng.random()
        desir = [0.0] * n
        best = -1.0
        n_best = 0
        total = 0.0
        remaining = 0
        for j in range(n):
            if self.scheduled[j]:
                continue
            remaining += 1
            v = self.desirability(j)
            desir[j] = v
            total += v
            if v > best:
                best = v
                n_best = 1
            elif v == best:
                n_best += 1
        if remaining == 0:
            raise ValueError("no unscheduled jobs left")
        pick = -1
        if u_rule < self.policy.q0:
            want = min(int(u_sel * n_best), n_best - 1)
            seen = 0
            for j in range(n):
                if not self.scheduled[j] and desir[j] == best:
                    if seen == want:
                        pick = j
                        break
                    seen += 1
        elif total > 0.0:
            target = u_sel * total
            cum = 0.0
            for j in range(n):
                if self.scheduled[j]:
                    continue
                cum += desir[j]
                if cum > target:
                    pick = j
                    break
        if pick < 0:
            want = min(int(u_sel * remaining), remaining - 1)
            seen = 0
            for j in range(n):
                if not self.scheduled[j]:
                    if seen == want:
                        pick = j
                        break
                    seen += 1
        return pick

    def place(self, job: int) -> None:
        """Commit ``job`` to the current position and update running state."""
        if self.scheduled[job]:
            raise ValueError(f"job {job} is already scheduled")
        self._ensure_row()
        i = self.position
        self.scheduled[job] = True
        self.order.append(job)
        if self.source.mutates_during_construction:
            old = self.source.tau(i, job)
            self.source.local_update(i, job)
            if self.policy.rule == RULE_SUMMATION:
                self.prefix[job] += self.source.tau(i, job) - old
        self.elapsed += self.instance.jobs[job].processing_time

    def is_complete(self) -> bool:
        return len(self.order) == self.instance.n


def construct_schedule_reference(
    instance: Instance,
    policy: ConstructionPolicy,
    source: PheromoneSource,
    rng: np.random.Generator,
) -> Schedule:
    """Step-by-step construction; the oracle twin of construct_schedule."""
    state = ConstructionState(instance, policy, source)
    while not state.is_complete():
        state.place(state.select_next(rng))
    return tuple(state.order)


def construct_with_twt(
    instance: Instance,
    policy: ConstructionPolicy,
    source: PheromoneSource,
    rng: np.random.Generator,
    arrays: InstanceArrays | None = None,
) -> tuple[Schedule, int]:
    """Fast construction returning the schedule and its objective value."""
    if arrays is None:
        arrays = InstanceArrays.build(instance)
    n = instance.n
    tau = source.tau_dense()
    order = np.empty(n, dtype=np.int64)
    prefix = np.empty(n, dtype=np.float64)
    desir = np.empty(n, dtype=np.float64)
    u = rng.random(2 * n)
    params = getattr(source, "params", None)
    rho = params.rho if params is not None else 0.0
    tau0 = params.tau0 if params is not None else 0.0
    twt = _kernel.construct(
        tau, arrays.p, arrays.d, arrays.w, arrays.eta_due,
        float(policy.alpha), float(policy.beta), float(policy.q0),
        policy.rule == RULE_SUMMATION,
        policy.heuristic == HEURISTIC_MDD,
        source.mutates_during_construction,
        rho, tau0, u, order, prefix, desir,
    )
    return tuple(int(j) for j in order), int(twt)


def construct_schedule(
    instance: Instance,
    policy: ConstructionPolicy,
    source: PheromoneSource,
    rng: np.random.Generator,
) -> Schedule:
    """Build one complete schedule; always a valid permutation."""
    order, _ = construct_with_twt(instance, policy, source, rng)
    return order
