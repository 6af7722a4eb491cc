"""Experiment harness: parameter sweeps, alpha/beta racing tuner, and the
convergence/deviation analyses over solver traces.

Everything here is deterministic given the spec seeds: each solver run gets
a child seed mixed from the experiment seed and the run's coordinates, so
any row of any output table can be reproduced in isolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import betainc

from .instances import ReferenceTable
from .model import Instance
from .seeds import derive_seed, rng_from
from .solver import RunTrace, SolverConfig, config_with, run

PACO_K_GRID = (1, 5, 25)
WPACO_K_GRID = (10, 50, 100)
Q0_GRID = (0.1, 0.5, 0.9)
TAU_MAX_GRID = (1.0, 3.0, 10.0)


# --- stage-1 grid sweep ---


@dataclass(frozen=True)
class SweepSpec:
    """Grid of q0, tau_max, and population capacity, crossed in full."""

    base: SolverConfig
    q0_grid: tuple[float, ...] = Q0_GRID
    tau_max_grid: tuple[float, ...] = TAU_MAX_GRID
    k_grid: tuple[int, ...] | None = None  # per-algorithm default when None
    repetitions: int = 5

    def resolved_k_grid(self, algorithm: str) -> tuple[int, ...]:
        if self.k_grid is not None:
            return self.k_grid
        return PACO_K_GRID if algorithm == "paco" else WPACO_K_GRID

    def combos(self, algorithm: str) -> list[tuple[float, float, int]]:
        return [
            (q0, tau_max, k)
            for q0 in self.q0_grid
            for tau_max in self.tau_max_grid
            for k in self.resolved_k_grid(algorithm)
        ]


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    instance_id: str
    q0: float
    tau_max: float
    k: int
    rep: int
    seed: int
    best_twt: int
    wall_ms: float

    def sort_key(self):
        return (self.algorithm, self.instance_id, self.q0, self.tau_max, self.k, self.rep)


def _sweep_cell(args) -> SweepRow:
    instance, config, q0, tau_max, k, rep = args
    result = run(instance, config)
    return SweepRow(
        algorithm=config.algorithm,
        instance_id=instance.id,
        q0=q0,
        tau_max=tau_max,
        k=k,
        rep=rep,
        seed=config.seed,
        best_twt=result.best_twt,
        wall_ms=result.wall_time_s * 1000.0,
    )


def sweep(instances: Sequence[Instance], spec: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Solve every instance under every grid combination, ``repetitions``
    times each. Rows come back in canonical sorted order regardless of
    execution order or parallelism."""
    algorithm = spec.base.algorithm
    work = []
    for instance in instances:
        for q0, tau_max, k in spec.combos(algorithm):
            for rep in range(spec.repetitions):
                seed = derive_seed(
                    spec.base.seed, "sweep", algorithm, instance.id,
                    q0, tau_max, k, rep,
                )
                config = config_with(
                    spec.base, q0=q0, tau_max=tau_max, k=k, seed=seed,
                )
                work.append((instance, config, q0, tau_max, k, rep))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, work, chunksize=4))
    else:
        rows = [_sweep_cell(item) for item in work]
    return sorted(rows, key=SweepRow.sort_key)


@dataclass(frozen=True)
class ComboAggregate:
    algorithm: str
    q0: float
    tau_max: float
    k: int
    mean_twt: float
    rel_deviation: float  # vs. the best combination of the same algorithm


def aggregate_sweep(rows: Sequence[SweepRow]) -> list[ComboAggregate]:
    """Mean objective per grid combination, plus its relative distance from
    the best combination of the same algorithm."""
    sums: dict[tuple, list] = {}
    for row in rows:
        key = (row.algorithm, row.q0, row.tau_max, row.k)
        bucket = sums.setdefault(key, [0.0, 0])
        bucket[0] += row.best_twt
        bucket[1] += 1
    means = {key: total / count for key, (total, count) in sums.items()}
    best_by_algo: dict[str, float] = {}
    for (algo, *_), mean in means.items():
        best_by_algo[algo] = min(best_by_algo.get(algo, math.inf), mean)
    out = []
    for (algo, q0, tau_max, k), mean in sorted(means.items()):
        best = best_by_algo[algo]
        rel = (mean - best) / best if best > 0 else 0.0
        out.append(ComboAggregate(algo, q0, tau_max, k, mean, rel))
    return out


def marginal_mean(rows: Sequence[SweepRow], param: str) -> dict[str, dict[float, float]]:
    """Mean objective per algorithm per value of one grid parameter,
    averaged over everything else."""
    if param not in ("q0", "tau_max", "k"):
        raise ValueError(f"unknown sweep parameter {param!r}")
    sums: dict[tuple, list] = {}
    for row in rows:
        key = (row.algorithm, getattr(row, param))
        bucket = sums.setdefault(key, [0.0, 0])
        bucket[0] += row.best_twt
        bucket[1] += 1
    out: dict[str, dict[float, float]] = {}
    for (algo, value), (total, count) in sums.items():
        out.setdefault(algo, {})[value] = total / count
    return out


# --- stage-2 alpha/beta tuning (racing random search) ---


@dataclass(frozen=True)
class TuneSpec:
    """Racing random search over the alpha/beta lattice.

    Samples ``initial_configs`` points from the 0.001-step lattice, then
    repeatedly runs every survivor on a shared batch of fresh seeds and
    keeps the best ``survivor_fraction`` by cumulative mean objective,
    stopping when one survivor remains or the run budget is spent.
    """

    alpha_range: tuple[float, float] = (0.5, 3.0)
    beta_range: tuple[float, float] = (0.5, 3.0)
    step: float = 0.001
    budget: int = 2000
    initial_configs: int = 16
    survivor_fraction: float = 0.5
    seeds_per_round: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.budget < 10:
            raise ValueError("budget must be >= 10")
        if not 0.0 < self.survivor_fraction < 1.0:
            raise ValueError("survivor_fraction must be in (0, 1)")
        if self.initial_configs < 2:
            raise ValueError("initial_configs must be >= 2")
        if self.seeds_per_round < 1:
            raise ValueError("seeds_per_round must be >= 1")


@dataclass(frozen=True)
class TuneResult:
    alpha: float
    beta: float
    mean_twt: float
    runs_used: int


def _sample_lattice(rng: np.random.Generator, lo: float, hi: float, step: float) -> float:
    points = int(round((hi - lo) / step))
    idx = int(rng.integers(0, points + 1))
    return round(lo + idx * step, 9)


Objective = Callable[[float, float, int], float]


def tune_alpha_beta(
    instance: Instance,
    spec: TuneSpec,
    base_config: SolverConfig,
    objective: Objective | None = None,
) -> TuneResult:
    """Race sampled (alpha, beta) lattice points down to a single winner.

    ``objective`` defaults to a full solver run returning its best
    objective value; it can be swapped out for testing. Total objective
    evaluations never exceed spec.budget.
    """
    if objective is None:
        def objective(alpha: float, beta: float, seed: int) -> float:
            cfg = config_with(base_config, alpha=alpha, beta=beta, seed=seed)
            return float(run(instance, cfg).best_twt)

    rng = rng_from(spec.seed, "tune-sample", instance.id)
    candidates: list[tuple[float, float]] = []
    seen = set()
    tries = 0
    while len(candidates) < spec.initial_configs and tries < spec.initial_configs * 50:
        pair = (
            _sample_lattice(rng, *spec.alpha_range, spec.step),
            _sample_lattice(rng, *spec.beta_range, spec.step),
        )
        tries += 1
        if pair not in seen:
            seen.add(pair)
            candidates.append(pair)

    scores: dict[tuple[float, float], list[float]] = {c: [] for c in candidates}
    survivors = list(candidates)
    runs_used = 0
    round_idx = 0
    while True:
        affordable = (spec.budget - runs_used) // len(survivors)
        per = min(spec.seeds_per_round, affordable)
        if per < 1:
            break
        # one shared seed batch per round keeps the comparison paired
        seeds = [
            derive_seed(spec.seed, "tune-round", instance.id, round_idx, s)
            for s in range(per)
        ]
        for cand in survivors:
            for sd in seeds:
                scores[cand].append(objective(cand[0], cand[1], sd))
                runs_used += 1
        survivors.sort(key=lambda c: (float(np.mean(scores[c])), c))
        if len(survivors) == 1:
            break
        keep = max(1, math.ceil(len(survivors) * spec.survivor_fraction))
        if keep == len(survivors):
            keep -= 1
        survivors = survivors[:keep]
        round_idx += 1

    winner = min(survivors, key=lambda c: (float(np.mean(scores[c])), c))
    return TuneResult(
        alpha=winner[0],
        beta=winner[1],
        mean_twt=float(np.mean(scores[winner])),
        runs_used=runs_used,
    )


# --- trace analyses ---


def _positions_over_time(schedules: np.ndarray) -> np.ndarray:
    """(T, n) schedule rows -> (T, n) position of each job per iteration."""
    t_count, n = schedules.shape
    positions = np.empty_like(schedules)
    positions[np.arange(t_count)[:, None], schedules] = np.arange(n)[None, :]
    return positions


def _change_matrix(trace: RunTrace) -> np.ndarray:
    if trace.schedules is None:
        raise ValueError("trace does not record iteration-best schedules")
    if len(trace) < 2:
        raise ValueError("need at least two iterations to measure position changes")
    positions = _positions_over_time(np.asarray(trace.schedules))
    return positions[1:] != positions[:-1]


def position_change_stats(trace: RunTrace, instance: Instance) -> dict[int, float]:
    """Fraction of iteration transitions in which a job moved, averaged over
    the jobs sharing each weight value."""
    changed = _change_matrix(trace)
    weights = instance.weights
    return {
        int(w): float(changed[:, weights == w].mean())
        for w in sorted(set(int(v) for v in weights))
    }


def position_change_series(
    trace: RunTrace, instance: Instance, window: int
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Blocked-window version of position_change_stats.

    Returns the 1-based iteration at which each window of transitions
    starts, and one change-fraction series per weight value. A window
    covering the whole trace reduces to position_change_stats.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    changed = _change_matrix(trace)
    weights = instance.weights
    n_trans = changed.shape[0]
    starts = np.arange(0, n_trans, window)
    series: dict[int, np.ndarray] = {}
    for w in sorted(set(int(v) for v in weights)):
        cols = changed[:, weights == w]
        series[int(w)] = np.array(
            [cols[s : s + window].mean() for s in starts], dtype=np.float64
        )
    return starts + 1, series


def overall_change_fraction(trace: RunTrace) -> float:
    """Change fraction over all jobs and transitions (no weight grouping)."""
    return float(_change_matrix(trace).mean())


# --- correlation ---


def pvalue_from_r(r: float, n: int) -> float:
    """Two-tailed p for a sample correlation under the null of none,
    using the exact t-distribution with n - 2 degrees of freedom."""
    if n < 3:
        raise ValueError("need at least 3 samples")
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    t_sq = df * r * r / (1.0 - r * r)
    return float(betainc(df / 2.0, 0.5, df / (df + t_sq)))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson correlation and its two-tailed p-value.

    Rejects short or constant inputs outright rather than returning NaN.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d and the same length")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return r, pvalue_from_r(r, n)


# --- deviation report (method means vs. best-known reference) ---


@dataclass(frozen=True)
class AnalysisReport:
    """Aggregate comparison of per-method results against reference values."""

    method_mean: dict[str, float]
    ref_mean: float | None
    deviation: dict[str, float] | None  # fraction, e.g. 0.036 for +3.6%
    per_combo: dict[tuple[float, float], dict[str, float]] | None
    flagged: tuple[tuple[str, str], ...]  # (method, instance_id) without reference

    def summary_rows(self) -> list[tuple[str, float, float | None]]:
        return [
            (
                method,
                self.method_mean[method],
                None if self.deviation is None else self.deviation.get(method),
            )
            for method in sorted(self.method_mean)
        ]


ResultRows = Mapping[str, Sequence[tuple[str, int]]]


def deviation_report(
    results: ResultRows,
    reference: ReferenceTable,
    combos: Mapping[str, tuple[float, float]] | None = None,
    include_ids: Sequence[str] | None = None,
) -> AnalysisReport:
    """Mean objective per method and its relative deviation from the mean
    best-known value over the same instances.

    Rows whose instance id has no reference value are flagged and left out
    of the aggregates. ``combos`` (instance id -> (tf, rdd)) enables the
    per-cell breakdown; ``include_ids`` restricts the report to a subset.
    """
    allowed = set(include_ids) if include_ids is not None else None
    flagged: list[tuple[str, str]] = []
    kept: dict[str, list[tuple[str, int]]] = {}
    for method, rows in results.items():
        for instance_id, twt in rows:
            if allowed is not None and instance_id not in allowed:
                continue
            if len(reference) and instance_id not in reference:
                flagged.append((method, instance_id))
                continue
            kept.setdefault(method, []).append((instance_id, twt))

    method_mean = {
        method: float(np.mean([twt for _, twt in rows]))
        for method, rows in kept.items()
        if rows
    }
    if not len(reference):
        return AnalysisReport(
            method_mean=method_mean, ref_mean=None, deviation=None,
            per_combo=None, flagged=tuple(flagged),
        )

    covered_ids = sorted({iid for rows in kept.values() for iid, _ in rows})
    ref_mean = float(np.mean([reference[iid] for iid in covered_ids])) if covered_ids else None
    deviation = None
    if ref_mean:
        deviation = {
            method: (mean - ref_mean) / ref_mean
            for method, mean in method_mean.items()
        }

    per_combo = None
    if combos is not None and ref_mean:
        per_combo = {}
        cells = sorted({combos[iid] for iid in covered_ids if iid in combos})
        for cell in cells:
            cell_ids = {iid for iid in covered_ids if combos.get(iid) == cell}
            cell_ref = float(np.mean([reference[iid] for iid in sorted(cell_ids)]))
            cell_devs = {}
            for method, rows in kept.items():
                vals = [twt for iid, twt in rows if iid in cell_ids]
                if vals and cell_ref > 0:
                    cell_devs[method] = (float(np.mean(vals)) - cell_ref) / cell_ref
            per_combo[cell] = cell_devs
    return AnalysisReport(
        method_mean=method_mean, ref_mean=ref_mean, deviation=deviation,
        per_combo=per_combo, flagged=tuple(flagged),
    )
