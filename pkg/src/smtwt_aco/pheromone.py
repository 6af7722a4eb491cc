"""Pheromone representations: dense matrix, schedule population, weighted
per-position multisets.

All three expose the same read interface (``tau(i, j)`` and a dense n x n
snapshot for vectorized construction); they differ in how solutions feed
back into them. The two population forms derive tau from occurrence counts,
tau_ij = tau0 + tau_s * count(i, j), which keeps every value inside
[tau0, tau_max]. Updates mutate the structure in place and are meant to be
called by a single writer between construction phases.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Instance, Schedule, edd_schedule, total_weighted_tardiness

EVICT_OVERFLOW = "overflow"
EVICT_STRICT = "strict"
EVICT_MODES = (EVICT_OVERFLOW, EVICT_STRICT)


@dataclass(frozen=True)
class PheromoneParams:
    """Bounds and capacity shared by all pheromone representations.

    ``tau_s`` is the per-occurrence increment (tau_max - tau0) / k, fixed at
    construction so lookups and bounds use the exact same value.
    """

    tau0: float
    tau_max: float = 1.0
    k: int = 5
    rho: float = 0.1
    tau_s: float = field(init=False)

    def __post_init__(self) -> None:
        if self.tau0 <= 0.0:
            raise ValueError("tau0 must be positive")
        if self.tau_max < self.tau0:
            raise ValueError("tau_max must be >= tau0")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")
        object.__setattr__(self, "tau_s", (self.tau_max - self.tau0) / self.k)


def initial_pheromone(n: int, t_edd: int) -> float:
    """Initial pheromone level 1 / (n * T_edd).

    T_edd is the weighted tardiness of the earliest-due-date schedule; a
    zero value (instance trivially solvable) is clamped to 1 so the result
    stays finite and positive.
    """
    return 1.0 / (n * max(t_edd, 1))


def init_tau0(instance: Instance) -> float:
    """Instance-scaled initial pheromone from the EDD schedule's objective."""
    t_edd = total_weighted_tardiness(instance, edd_schedule(instance))
    return initial_pheromone(instance.n, t_edd)


def population_tau0(n: int) -> float:
    """Default pheromone floor for the population representations.

    The matrix variant needs its floor on the 1/(n * T_edd) deposit scale,
    but for populations tau0 is a pure exploration floor competing with
    count increments of (tau_max - tau0) / k. A floor of one tenth of the
    uniform per-position share keeps zero-count jobs reachable while still
    letting a full multiset dominate by two orders of magnitude; the
    objective-scaled value is several orders too small for that and makes
    the search collapse onto the first iteration's best schedule.
    """
    return 1.0 / (10.0 * n)


class PheromoneMatrix:
    """Classic persistent position-by-job pheromone matrix.

    Local updates nudge a single entry back toward tau0 during construction;
    the global update evaporates everything and rewards the best schedule
    found so far with a deposit of 1/T_b on its position-job pairs.
    """

    def __init__(self, n: int, params: PheromoneParams):
        self.n = n
        self.params = params
        self.values = np.full((n, n), params.tau0, dtype=np.float64)

    def tau(self, position: int, job: int) -> float:
        return float(self.values[position, job])

    def tau_dense(self) -> np.ndarray:
        """Live array; construction-time local updates write through it."""
        return self.values

    @property
    def mutates_during_construction(self) -> bool:
        return True

    def local_update(self, position: int, job: int) -> None:
        rho, tau0 = self.params.rho, self.params.tau0
        self.values[position, job] = (1.0 - rho) * self.values[position, job] + rho * tau0

    def global_update(self, best_order: Sequence[int], best_twt: int) -> None:
        rho = self.params.rho
        self.values *= 1.0 - rho
        deposit = 1.0 / max(best_twt, 1)
        self.values[np.arange(self.n), np.asarray(best_order)] += deposit

    def check_invariants(self) -> None:
        if not (self.values > 0.0).all():
            raise AssertionError("pheromone matrix entries must stay positive")


class _CountBased:
    """Shared tau-from-counts logic for the two population forms."""

    n: int
    params: PheromoneParams
    counts: np.ndarray

    def tau(self, position: int, job: int) -> float:
        return self.params.tau0 + self.params.tau_s * float(self.counts[position, job])

    def tau_dense(self) -> np.ndarray:
        """Fresh snapshot; later population updates do not write through."""
        return self.params.tau0 + self.params.tau_s * self.counts

    @property
    def mutates_during_construction(self) -> bool:
        return False

    def recount(self) -> np.ndarray:
        raise NotImplementedError

    def check_invariants(self) -> None:
        k = self.params.k
        per_position = self.counts.sum(axis=1)
        if (per_position > k).any():
            raise AssertionError("position holds more than k entries")
        if (self.counts < 0).any():
            raise AssertionError("negative occurrence count")
        if not np.array_equal(self.counts, self.recount()):
            raise AssertionError("incremental counts diverged from a recount")


class AgePopulation(_CountBased):
    """First-in-first-out population of complete schedules, capacity k.

    Inserting into a full population evicts the oldest schedule; during the
    initial fill nothing is evicted. Occurrence counts are maintained
    incrementally and drive the tau values.
    """

    def __init__(self, n: int, params: PheromoneParams):
        self.n = n
        self.params = params
        self.schedules: deque[Schedule] = deque()
        self.counts = np.zeros((n, n), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.schedules)

    def contents(self) -> tuple[Schedule, ...]:
        """Oldest first."""
        return tuple(self.schedules)

    def add(self, order: Sequence[int]) -> None:
        order = tuple(order)
        positions = np.arange(self.n)
        if len(self.schedules) >= self.params.k:
            oldest = self.schedules.popleft()
            self.counts[positions, np.asarray(oldest)] -= 1
        self.schedules.append(order)
        self.counts[positions, np.asarray(order)] += 1

    def recount(self) -> np.ndarray:
        fresh = np.zeros((self.n, self.n), dtype=np.int64)
        for sched in self.schedules:
            for i, j in enumerate(sched):
                fresh[i, j] += 1
        return fresh


class WeightedPopulation(_CountBased):
    """Per-position FIFO multisets of jobs, each with capacity k.

    Inserting a schedule adds, at every position i, min(weight, k) copies of
    the job scheduled there, evicting just enough of the oldest entries to
    make room ("overflow" mode, the default). "strict" mode instead always
    evicts that many oldest entries first, even when there is room. Columns
    are independent, so they need not line up into feasible schedules.
    """

    def __init__(self, n: int, params: PheromoneParams, evict_mode: str = EVICT_OVERFLOW):
        if evict_mode not in EVICT_MODES:
            raise ValueError(f"evict_mode must be one of {EVICT_MODES}, got {evict_mode!r}")
        self.n = n
        self.params = params
        self.evict_mode = evict_mode
        self.columns: list[deque[int]] = [deque() for _ in range(n)]
        self.counts = np.zeros((n, n), dtype=np.int64)

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(col) for col in self.columns)

    def contents(self) -> tuple[tuple[int, ...], ...]:
        """Per position, oldest first."""
        return tuple(tuple(col) for col in self.columns)

    def add(self, order: Sequence[int], weights: Sequence[int]) -> None:
        """Insert a schedule, each job repeated by its (capacity-clamped) weight.

        ``weights`` is indexed by job. Copies inserted together share an age
        and leave in insertion order when later evicted.
        """
        k = self.params.k
        for i, j in enumerate(order):
            col = self.columns[i]
            copies = min(int(weights[j]), k)
            if self.evict_mode == EVICT_STRICT:
                evict = min(copies, len(col))
            else:
                evict = max(len(col) + copies - k, 0)
            for _ in range(evict):
                gone = col.popleft()
                self.counts[i, gone] -= 1
            col.extend([j] * copies)
            self.counts[i, j] += copies

    def recount(self) -> np.ndarray:
        fresh = np.zeros((self.n, self.n), dtype=np.int64)
        for i, col in enumerate(self.columns):
            for j, c in Counter(col).items():
                fresh[i, j] = c
        return fresh


PheromoneSource = PheromoneMatrix | AgePopulation | WeightedPopulation
