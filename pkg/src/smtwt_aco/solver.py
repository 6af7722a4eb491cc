"""Algorithm drivers: iteration loops, traces, deterministic replay.

Three variants share one construction engine and differ in how feedback
flows: "aco" keeps a persistent pheromone matrix (per-placement local decay
plus an end-of-iteration global update rewarding the best schedule found so
far), "paco" maintains a FIFO population of recent iteration-best schedules,
and "wpaco" maintains per-position multisets where each job is inserted in
proportion to its weight.

A run is single-threaded and bitwise deterministic: ants construct in fixed
order from one generator seeded by config.seed, consuming two uniforms per
position each.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field, asdict, replace
from typing import Sequence

import numpy as np

from . import _kernel
from .construction import ConstructionPolicy, InstanceArrays, RULE_SUMMATION, HEURISTIC_MDD
from .model import Instance, Schedule, edd_schedule
from .pheromone import (
    EVICT_OVERFLOW,
    AgePopulation,
    PheromoneMatrix,
    PheromoneParams,
    PheromoneSource,
    WeightedPopulation,
    init_tau0,
    population_tau0,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("aco", "paco", "wpaco")
DEFAULT_K = {"aco": 1, "paco": 5, "wpaco": 50}

POPULATION_EMPTY = "empty"
POPULATION_EDD = "edd"


@dataclass(frozen=True)
class SolverConfig:
    """Full parameterization of one run; everything needed to replay it."""

    algorithm: str = "wpaco"
    ants: int = 10
    iterations: int = 10000
    policy: ConstructionPolicy = field(default_factory=ConstructionPolicy)
    tau_max: float = 1.0
    k: int | None = None
    rho: float = 0.1
    tau0: float | None = None  # None: per-algorithm default, see resolve_tau0
    seed: int = 0
    evict_mode: str = EVICT_OVERFLOW
    init_population: str = POPULATION_EMPTY
    record_schedules: bool = False
    check_every: int = 100
    time_limit_s: float | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.ants < 1:
            raise ValueError("ants must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.init_population not in (POPULATION_EMPTY, POPULATION_EDD):
            raise ValueError(f"unknown init_population {self.init_population!r}")

    @property
    def resolved_k(self) -> int:
        return self.k if self.k is not None else DEFAULT_K[self.algorithm]

    def resolve_tau0(self, instance: Instance) -> float:
        """The pheromone floor for this run.

        The matrix variant uses the objective-scaled initial value (it must
        be commensurate with 1/T_b deposits); the population variants use
        the uniform-share exploration floor.
        """
        if self.tau0 is not None:
            return self.tau0
        if self.algorithm == "aco":
            return init_tau0(instance)
        return population_tau0(instance.n)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        d["policy"] = ConstructionPolicy(**d["policy"])
        return cls(**d)


@dataclass
class RunTrace:
    """Per-iteration record: iteration-best and best-so-far objective values,
    plus (optionally) the iteration-best schedule itself."""

    iteration_best: np.ndarray
    best_so_far: np.ndarray
    schedules: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.iteration_best)


@dataclass
class RunResult:
    instance_id: str
    config: SolverConfig
    best_order: Schedule
    best_twt: int
    trace: RunTrace
    wall_time_s: float


def build_pheromone_source(
    instance: Instance, config: SolverConfig, params: PheromoneParams
) -> PheromoneSource:
    n = instance.n
    if config.algorithm == "aco":
        return PheromoneMatrix(n, params)
    if config.algorithm == "paco":
        source: AgePopulation | WeightedPopulation = AgePopulation(n, params)
    else:
        source = WeightedPopulation(n, params, evict_mode=config.evict_mode)
    if config.init_population == POPULATION_EDD:
        seed_order = edd_schedule(instance)
        weights = instance.weights
        for _ in range(params.k):
            if isinstance(source, AgePopulation):
                source.add(seed_order)
            else:
                source.add(seed_order, weights)
    return source


def run(instance: Instance, config: SolverConfig) -> RunResult:
    """Execute one full solver run, deterministically from config.seed."""
    t_start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    arrays = InstanceArrays.build(instance)
    params = PheromoneParams(
        tau0=config.resolve_tau0(instance), tau_max=config.tau_max,
        k=config.resolved_k, rho=config.rho,
    )
    source = build_pheromone_source(instance, config, params)
    n = instance.n
    policy = config.policy
    use_sum = policy.rule == RULE_SUMMATION
    use_mdd = policy.heuristic == HEURISTIC_MDD
    do_local = source.mutates_during_construction
    weights = instance.weights

    iter_best = np.empty(config.iterations, dtype=np.int64)
    best_so_far = np.empty(config.iterations, dtype=np.int64)
    schedules = (
        np.empty((config.iterations, n), dtype=np.int32)
        if config.record_schedules
        else None
    )
    order_buf = np.empty(n, dtype=np.int64)
    it_best_buf = np.empty(n, dtype=np.int64)
    prefix_buf = np.empty(n, dtype=np.float64)
    desir_buf = np.empty(n, dtype=np.float64)

    best_twt: int | None = None
    best_order: np.ndarray | None = None
    completed = 0
    for it in range(config.iterations):
        tau = source.tau_dense()
        it_twt: int | None = None
        for _ in range(config.ants):
            u = rng.random(2 * n)
            twt = int(
                _kernel.construct(
                    tau, arrays.p, arrays.d, arrays.w, arrays.eta_due,
                    float(policy.alpha), float(policy.beta), float(policy.q0),
                    use_sum, use_mdd, do_local,
                    params.rho, params.tau0, u, order_buf, prefix_buf, desir_buf,
                )
            )
            if it_twt is None or twt < it_twt:
                it_twt = twt
                it_best_buf[:] = order_buf
        assert it_twt is not None
        if best_twt is None or it_twt < best_twt:
            best_twt = it_twt
            best_order = it_best_buf.copy()
        iter_best[it] = it_twt
        best_so_far[it] = best_twt
        if schedules is not None:
            schedules[it] = it_best_buf

        if config.algorithm == "aco":
            assert isinstance(source, PheromoneMatrix)
            source.global_update(best_order, best_twt)
        elif config.algorithm == "paco":
            assert isinstance(source, AgePopulation)
            source.add(tuple(int(j) for j in it_best_buf))
        else:
            assert isinstance(source, WeightedPopulation)
            source.add(it_best_buf, weights)
        completed = it + 1
        if config.check_every and completed % config.check_every == 0:
            source.check_invariants()
        if config.time_limit_s is not None and time.perf_counter() - t_start > config.time_limit_s:
            break

    trace = RunTrace(
        iteration_best=iter_best[:completed],
        best_so_far=best_so_far[:completed],
        schedules=schedules[:completed] if schedules is not None else None,
    )
    assert best_order is not None and best_twt is not None
    return RunResult(
        instance_id=instance.id,
        config=config,
        best_order=tuple(int(j) for j in best_order),
        best_twt=best_twt,
        trace=trace,
        wall_time_s=time.perf_counter() - t_start,
    )


def replay_check(result: RunResult, instance: Instance) -> bool:
    """Re-run from the result's own config and compare.

    Returns False (logging the first diverging iteration) on a value
    mismatch; raises ValueError if the result is structurally inconsistent
    with its config, e.g. a truncated trace.
    """
    config = result.config
    if config.time_limit_s is None and len(result.trace) != config.iterations:
        raise ValueError(
            f"trace length {len(result.trace)} does not match configured "
            f"iterations {config.iterations}"
        )
    fresh = run(instance, config)
    if fresh.best_twt != result.best_twt:
        log.warning(
            "replay best TWT %d != recorded %d", fresh.best_twt, result.best_twt
        )
        return False
    for name in ("iteration_best", "best_so_far"):
        a = getattr(fresh.trace, name)
        b = getattr(result.trace, name)
        if not np.array_equal(a, b):
            first = int(np.nonzero(a != b)[0][0])
            log.warning("replay diverges in %s at iteration %d", name, first + 1)
            return False
    if result.trace.schedules is not None:
        if fresh.trace.schedules is None or not np.array_equal(
            fresh.trace.schedules, result.trace.schedules
        ):
            diff = (
                np.nonzero((fresh.trace.schedules != result.trace.schedules).any(axis=1))[0]
                if fresh.trace.schedules is not None
                else [0]
            )
            log.warning("replay diverges in schedules at iteration %d", int(diff[0]) + 1)
            return False
    if fresh.best_order != result.best_order:
        log.warning("replay best schedule differs")
        return False
    return True


# --- trace CSV round-trip ---

TRACE_HEADER = ("iteration", "iter_best_twt", "best_so_far_twt")
TRACE_SCHEDULE_COLUMN = "iter_best_schedule"


def write_trace_csv(trace: RunTrace, fh) -> None:
    """Write one row per iteration; iterations and job indices are 1-based
    on disk. The schedule column is included when the trace recorded it."""
    writer = csv.writer(fh, lineterminator="\n")
    with_sched = trace.schedules is not None
    header = TRACE_HEADER + ((TRACE_SCHEDULE_COLUMN,) if with_sched else ())
    writer.writerow(header)
    for it in range(len(trace)):
        row = [it + 1, int(trace.iteration_best[it]), int(trace.best_so_far[it])]
        if with_sched:
            row.append(" ".join(str(int(j) + 1) for j in trace.schedules[it]))
        writer.writerow(row)


def read_trace_csv(fh_or_text) -> RunTrace:
    """Inverse of write_trace_csv (indices back to 0-based)."""
    fh = io.StringIO(fh_or_text) if isinstance(fh_or_text, str) else fh_or_text
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(header[:3]) != TRACE_HEADER:
        raise ValueError(f"not a trace CSV: header {header!r}")
    with_sched = len(header) > 3 and header[3] == TRACE_SCHEDULE_COLUMN
    iter_best = []
    best = []
    scheds: list[list[int]] = []
    for row in reader:
        if not row:
            continue
        iter_best.append(int(row[1]))
        best.append(int(row[2]))
        if with_sched:
            scheds.append([int(tok) - 1 for tok in row[3].split()])
    return RunTrace(
        iteration_best=np.asarray(iter_best, dtype=np.int64),
        best_so_far=np.asarray(best, dtype=np.int64),
        schedules=np.asarray(scheds, dtype=np.int32) if with_sched else None,
    )


def config_with(config: SolverConfig, **changes) -> SolverConfig:
    """Convenience for sweeps/tuning: a copy with selected fields replaced."""
    policy_changes = {
        key: changes.pop(key)
        for key in ("rule", "heuristic", "alpha", "beta", "q0")
        if key in changes
    }
    if policy_changes:
        changes["policy"] = replace(config.policy, **policy_changes)
    return replace(config, **changes)
