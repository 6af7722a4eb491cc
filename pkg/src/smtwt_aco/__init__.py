"""Ant colony optimization for single-machine total weighted tardiness.

Solvers: classic matrix-based ACO, population-based ACO (FIFO schedule
population), and weighted-population ACO (per-position multisets scaled by
job weights). Plus a benchmark instance generator, parameter sweep and
tuning harness, and trace analyses.
"""

from .construction import (
    ConstructionPolicy,
    ConstructionState,
    construct_schedule,
    construct_schedule_reference,
)
from .instances import (
    EvaluationSet,
    GeneratorConfig,
    ReferenceTable,
    generate_evaluation_set,
    generate_instance,
    load_reference,
    parse_orlib,
    serialize_instance,
)
from .model import (
    Evaluation,
    Instance,
    Job,
    Schedule,
    edd_eta,
    edd_schedule,
    evaluate,
    mdd_eta,
    total_weighted_tardiness,
)
from .pheromone import (
    AgePopulation,
    PheromoneMatrix,
    PheromoneParams,
    WeightedPopulation,
    init_tau0,
    population_tau0,
)
from .solver import RunResult, RunTrace, SolverConfig, replay_check, run
from .experiments import (
    AnalysisReport,
    SweepSpec,
    TuneSpec,
    deviation_report,
    pearson,
    position_change_series,
    position_change_stats,
    sweep,
    tune_alpha_beta,
)

__version__ = "0.1.0"

__all__ = [
    "AgePopulation",
    "AnalysisReport",
    "ConstructionPolicy",
    "ConstructionState",
    "Evaluation",
    "EvaluationSet",
    "GeneratorConfig",
    "Instance",
    "Job",
    "PheromoneMatrix",
    "PheromoneParams",
    "ReferenceTable",
    "RunResult",
    "RunTrace",
    "Schedule",
    "SolverConfig",
    "SweepSpec",
    "TuneSpec",
    "WeightedPopulation",
    "construct_schedule",
    "construct_schedule_reference",
    "deviation_report",
    "edd_eta",
    "edd_schedule",
    "evaluate",
    "generate_evaluation_set",
    "generate_instance",
    "init_tau0",
    "load_reference",
    "mdd_eta",
    "parse_orlib",
    "pearson",
    "population_tau0",
    "position_change_series",
    "position_change_stats",
    "replay_check",
    "run",
    "serialize_instance",
    "sweep",
    "total_weighted_tardiness",
    "tune_alpha_beta",
]
