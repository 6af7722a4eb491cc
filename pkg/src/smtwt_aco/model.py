"""Problem model: jobs, instances, schedules, and tardiness evaluation.

A schedule is a plain tuple of 0-based job indices; positions run 0..n-1
in processing order. All times are exact integers, desirabilities are
floats. Everything in this module is immutable and side-effect free.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

Schedule = tuple[int, ...]


@dataclass(frozen=True)
class Job:
    """A single job: how long it runs, when it is due, how much it matters."""

    processing_time: int
    due_date: int
    weight: int = 1

    def __post_init__(self) -> None:
        if self.processing_time < 1:
            raise ValueError(f"processing_time must be >= 1, got {self.processing_time}")
        if self.due_date < 0:
            raise ValueError(f"due_date must be >= 0, got {self.due_date}")
        if self.weight < 1:
            raise ValueError(f"weight must be >= 1, got {self.weight}")


@dataclass(frozen=True)
class Instance:
    """An ordered set of jobs to be sequenced on one machine."""

    jobs: tuple[Job, ...]
    id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if len(self.jobs) < 1:
            raise ValueError("an instance needs at least one job")

    @property
    def n(self) -> int:
        return len(self.jobs)

    @cached_property
    def processing_times(self) -> np.ndarray:
        return np.array([j.processing_time for j in self.jobs], dtype=np.int64)

    @cached_property
    def due_dates(self) -> np.ndarray:
        return np.array([j.due_date for j in self.jobs], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([j.weight for j in self.jobs], dtype=np.int64)

    @classmethod
    def from_arrays(
        cls,
        processing_times: Sequence[int],
        due_dates: Sequence[int],
        weights: Sequence[int],
        id: str = "",
    ) -> "Instance":
        if not len(processing_times) == len(due_dates) == len(weights):
            raise ValueError("processing_times, due_dates, weights must have equal length")
        jobs = tuple(
            Job(int(p), int(d), int(w))
            for p, d, w in zip(processing_times, due_dates, weights)
        )
        return cls(jobs=jobs, id=id)


@dataclass(frozen=True)
class Evaluation:
    """Completion times, tardiness, and the weighted-tardiness objective.

    ``completion_times[j]`` and ``tardiness[j]`` are indexed by job, not by
    position: completion_times[j] is when job j finishes under the evaluated
    schedule.
    """

    completion_times: tuple[int, ...]
    tardiness: tuple[int, ...]
    total_weighted_tardiness: int


def is_permutation(order: Sequence[int], n: int) -> bool:
    """True iff ``order`` visits each of 0..n-1 exactly once."""
    if len(order) != n:
        return False
    seen = [False] * n
    for j in order:
        if not 0 <= j < n or seen[j]:
            return False
        seen[j] = True
    return True


def check_permutation(order: Sequence[int], n: int) -> None:
    if not is_permutation(order, n):
        raise ValueError(f"schedule {tuple(order)!r} is not a permutation of 0..{n - 1}")


def evaluate(instance: Instance, order: Sequence[int]) -> Evaluation:
    """Evaluate a schedule: completion times, per-job tardiness, total.

    Jobs run back to back starting at time 0 in schedule order; a job's
    tardiness is how far its completion overshoots its due date (never
    negative), and the objective sums weight * tardiness over all jobs.
    Raises ValueError if ``order`` is not a permutation of the instance's
    job indices.
    """
    n = instance.n
    check_permutation(order, n)
    completion = [0] * n
    tardiness = [0] * n
    elapsed = 0
    total = 0
    for j in order:
        job = instance.jobs[j]
        elapsed += job.processing_time
        completion[j] = elapsed
        late = elapsed - job.due_date
        if late > 0:
            tardiness[j] = late
            total += job.weight * late
    return Evaluation(
        completion_times=tuple(completion),
        tardiness=tuple(tardiness),
        total_weighted_tardiness=total,
    )


def total_weighted_tardiness(instance: Instance, order: Sequence[int]) -> int:
    """Objective value only; agrees with evaluate() but skips the vectors."""
    check_permutation(order, instance.n)
    elapsed = 0
    total = 0
    jobs = instance.jobs
    for j in order:
        job = jobs[j]
        elapsed += job.processing_time
        late = elapsed - job.due_date
        if late > 0:
            total += job.weight * late
    return total


def edd_schedule(instance: Instance) -> Schedule:
    """Earliest-due-date order: ascending due date, ties by job index."""
    return tuple(sorted(range(instance.n), key=lambda j: instance.jobs[j].due_date))


def edd_eta(job: Job) -> float:
    """EDD desirability 1/d, clamped so a zero due date stays finite."""
    return 1.0 / max(job.due_date, 1)


def mdd_eta(elapsed: int, job: Job) -> float:
    """Modified-due-date desirability for appending ``job`` after ``elapsed``.

    1 / (max(elapsed + p, d) - elapsed): for a job that would still finish
    on time this is 1 / remaining slack-plus-processing; once the job is
    late it degrades to 1/p regardless of the due date. Always in (0, 1].
    """
    if elapsed < 0:
        raise ValueError("elapsed time cannot be negative")
    completion = elapsed + job.processing_time
    return 1.0 / (max(completion, job.due_date) - elapsed)
