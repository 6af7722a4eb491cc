"""Command-line interface.

Subcommands: generate, solve, sweep, tune, analyze, report. Every flag that
affects a run has a deterministic default, seeds are always echoed into the
outputs, and passing --no-timestamp makes outputs byte-identical across
reruns (it also zeroes wall-clock fields, which are otherwise the only
nondeterministic bytes).

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import experiments, solver
from .construction import ConstructionPolicy
from .instances import (
    RDD_GRID,
    TF_GRID,
    GeneratorConfig,
    ParseError,
    generate_evaluation_set,
    generate_instance,
    load_instance_file,
    load_reference_file,
    serialize_instance,
)
from .model import Instance
from .seeds import derive_seed
from .solver import SolverConfig, read_trace_csv, write_trace_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


# --- shared helpers ---


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _add_solver_flags(p: argparse.ArgumentParser, include_algo: bool = True) -> None:
    if include_algo:
        p.add_argument("--algo", default="wpaco", choices=solver.ALGORITHMS,
                       help="algorithm variant (default wpaco)")
    p.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    p.add_argument("--ants", type=int, default=10, help="ants per iteration (default 10)")
    p.add_argument("--iterations", type=int, default=10000,
                   help="iterations per run (default 10000)")
    p.add_argument("--alpha", type=float, default=1.0, help="pheromone exponent (default 1)")
    p.add_argument("--beta", type=float, default=2.0, help="heuristic exponent (default 2)")
    p.add_argument("--q0", type=float, default=0.1,
                   help="greedy-selection probability (default 0.1)")
    p.add_argument("--rule", default="summation", choices=("plain", "summation"),
                   help="pheromone aggregation rule (default summation)")
    p.add_argument("--heuristic", default="mdd", choices=("edd", "mdd"),
                   help="dispatch heuristic (default mdd)")
    p.add_argument("--tau-max", type=float, default=1.0,
                   help="pheromone upper bound (default 1)")
    p.add_argument("--k", type=int, default=None,
                   help="population capacity (default: 5 for paco, 50 for wpaco)")
    p.add_argument("--rho", type=float, default=0.1,
                   help="matrix evaporation rate, aco only (default 0.1)")
    p.add_argument("--tau0", type=float, default=None,
                   help="pheromone floor override (default: 1/(n*T_edd) for aco, "
                        "1/(10n) for populations)")
    p.add_argument("--evict-mode", default="overflow", choices=("overflow", "strict"),
                   help="weighted-population eviction rule (default overflow)")
    p.add_argument("--init-population", default="empty", choices=("empty", "edd"),
                   help="start populations empty or seeded with the EDD schedule")


def _solver_config(args, algorithm: str | None = None) -> SolverConfig:
    policy = ConstructionPolicy(
        rule=args.rule, heuristic=args.heuristic,
        alpha=args.alpha, beta=args.beta, q0=args.q0,
    )
    return SolverConfig(
        algorithm=algorithm or args.algo,
        ants=args.ants,
        iterations=args.iterations,
        policy=policy,
        tau_max=args.tau_max,
        k=args.k,
        rho=args.rho,
        tau0=args.tau0,
        seed=args.seed,
        evict_mode=args.evict_mode,
        init_population=args.init_population,
        record_schedules=getattr(args, "record_schedules", False),
    )


def _load_instances_arg(args) -> list[Instance]:
    """Instances from --manifest DIR or positional files (+ optional --n)."""
    loaded: list[Instance] = []
    if getattr(args, "manifest", None):
        loaded.extend(entry[0] for entry in _read_manifest(args.manifest))
    for path in getattr(args, "files", []) or []:
        loaded.extend(load_instance_file(path, n=getattr(args, "n", None)))
    if not loaded:
        raise UsageError("no instances given: pass files or --manifest DIR")
    return loaded


def _read_manifest(directory: str) -> list[tuple[Instance, float, float, int]]:
    path = os.path.join(directory, "manifest.csv")
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            n = int(row["n"])
            fname = os.path.join(directory, row["id"] + ".txt")
            found = load_instance_file(fname, n=n, id_prefix=row["id"])
            if len(found) != 1:
                raise ParseError(f"{fname} must hold exactly one instance")
            entries.append((found[0], float(row["tf"]), float(row["rdd"]), int(row["seed"])))
    return entries


def _apply_config_file(parser: argparse.ArgumentParser, args, argv: list[str]) -> None:
    """Fill flags from a key=value file; explicit CLI flags win."""
    path = getattr(args, "config", None)
    if not path:
        return
    actions = {a.dest: a for a in parser._actions}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key = value")
            key, _, raw = line.partition("=")
            dest = key.strip().replace("-", "_")
            raw = raw.strip()
            action = actions.get(dest)
            if action is None:
                raise UsageError(f"{path}:{lineno}: unknown option {key.strip()!r}")
            if any(opt in argv for opt in action.option_strings):
                continue
            if isinstance(action, argparse._StoreTrueAction):
                value: object = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
            if action.choices is not None and value not in action.choices:
                raise UsageError(
                    f"{path}:{lineno}: {key.strip()} must be one of {tuple(action.choices)}"
                )
            setattr(args, dest, value)


def _write_rows(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value: float) -> str:
    return f"{value:g}"


# --- generate ---


def cmd_generate(args) -> int:
    if args.full_set:
        eval_set = generate_evaluation_set(
            per_combo=args.per_combo, seed=args.seed, n=args.n,
            p_range=(args.p_min, args.p_max), w_range=(args.w_min, args.w_max),
        )
        entries = [(e.instance, e.tf, e.rdd, e.seed) for e in eval_set.entries]
    else:
        if args.tf is None or args.rdd is None:
            raise UsageError("give --tf and --rdd, or --full-set")
        if not args.allow_offgrid:
            if args.tf not in TF_GRID:
                raise UsageError(f"--tf {args.tf} is off the grid {TF_GRID} (use --allow-offgrid)")
            if args.rdd not in RDD_GRID:
                raise UsageError(f"--rdd {args.rdd} is off the grid {RDD_GRID} (use --allow-offgrid)")
        entries = []
        for rep in range(args.count):
            child = derive_seed(args.seed, "instance", args.tf, args.rdd, rep)
            cfg = GeneratorConfig(
                n=args.n, tf=args.tf, rdd=args.rdd, seed=child,
                p_range=(args.p_min, args.p_max), w_range=(args.w_min, args.w_max),
            )
            entries.append((generate_instance(cfg), args.tf, args.rdd, child))

    os.makedirs(args.out, exist_ok=True)
    manifest_rows = []
    for instance, tf, rdd, seed in entries:
        fname = os.path.join(args.out, instance.id + ".txt")
        with open(fname, "w", encoding="ascii") as fh:
            fh.write(serialize_instance(instance))
        manifest_rows.append((instance.id, _fmt(tf), _fmt(rdd), seed, instance.n))
    _write_rows(
        os.path.join(args.out, "manifest.csv"),
        ("id", "tf", "rdd", "seed", "n"),
        manifest_rows,
    )
    print(f"wrote {len(entries)} instance(s) to {args.out}")
    return 0


# --- solve ---


def cmd_solve(args) -> int:
    found = load_instance_file(args.instance, n=args.n)
    if not 0 <= args.index < len(found):
        raise UsageError(f"--index {args.index} out of range; file holds {len(found)} instance(s)")
    instance = found[args.index]
    config = _solver_config(args)
    result = solver.run(instance, config)

    wall_ms = 0.0 if args.no_timestamp else result.wall_time_s * 1000.0
    record = {
        "instance_id": instance.id,
        "algorithm": config.algorithm,
        "seed": config.seed,
        "best_twt": result.best_twt,
        "best_schedule": [j + 1 for j in result.best_order],
        "wall_ms": round(wall_ms, 3),
        "config": config.to_dict(),
    }
    if not args.no_timestamp:
        record["timestamp"] = _utc_now()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(record, fh, sort_keys=True)
            fh.write("\n")
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            write_trace_csv(result.trace, fh)
    print(f"{instance.id} {config.algorithm} seed={config.seed} best_twt={result.best_twt}")
    return 0


# --- sweep ---


def cmd_sweep(args) -> int:
    loaded = _load_instances_arg(args)
    algorithms = ("paco", "wpaco") if args.algo == "both" else (args.algo,)
    all_rows: list[experiments.SweepRow] = []
    for algorithm in algorithms:
        base = _solver_config(args, algorithm=algorithm)
        spec = experiments.SweepSpec(
            base=base,
            q0_grid=args.q0_grid,
            tau_max_grid=args.tau_max_grid,
            k_grid=args.k_grid,
            repetitions=args.reps,
        )
        all_rows.extend(experiments.sweep(loaded, spec, jobs=args.jobs))
    all_rows.sort(key=experiments.SweepRow.sort_key)
    _write_rows(
        args.out,
        ("algorithm", "instance_id", "q0", "tau_max", "k", "rep", "seed", "best_twt", "wall_ms"),
        (
            (
                r.algorithm, r.instance_id, _fmt(r.q0), _fmt(r.tau_max), r.k,
                r.rep, r.seed, r.best_twt,
                0 if args.no_timestamp else round(r.wall_ms, 3),
            )
            for r in all_rows
        ),
    )
    print(f"wrote {len(all_rows)} sweep rows to {args.out}")
    return 0


# --- tune ---


def cmd_tune(args) -> int:
    loaded = _load_instances_arg(args)
    base = _solver_config(args)
    spec = experiments.TuneSpec(
        budget=args.budget,
        initial_configs=args.initial_configs,
        seeds_per_round=args.seeds_per_round,
        seed=args.seed,
    )
    rows = []
    for instance in loaded:
        tuned = experiments.tune_alpha_beta(instance, spec, base)
        rows.append((instance.id, tuned.alpha, tuned.beta, tuned.mean_twt, tuned.runs_used))
        print(
            f"{instance.id}: alpha={tuned.alpha:.3f} beta={tuned.beta:.3f} "
            f"mean_twt={tuned.mean_twt:.1f} runs={tuned.runs_used}"
        )
    _write_rows(args.out, ("instance_id", "alpha", "beta", "mean_twt", "runs_used"), rows)
    return 0


# --- analyze ---


def cmd_analyze(args) -> int:
    if len(args.trace) != len(args.instance):
        raise UsageError("--trace and --instance must be given the same number of times")
    pairs = []
    for trace_path, inst_path in zip(args.trace, args.instance):
        with open(trace_path, "r", newline="", encoding="utf-8") as fh:
            trace = read_trace_csv(fh)
        if trace.schedules is None:
            raise ParseError(
                f"{trace_path} lacks the iter_best_schedule column; "
                "re-run solve with --record-schedules"
            )
        found = load_instance_file(inst_path, n=args.n)
        if len(found) != 1:
            raise ParseError(f"{inst_path} must hold exactly one instance")
        pairs.append((os.path.basename(trace_path), trace, found[0]))

    stats_rows = []
    per_weight: dict[int, list[float]] = {}
    for label, trace, instance in pairs:
        stats = experiments.position_change_stats(trace, instance)
        for weight, frac in sorted(stats.items()):
            stats_rows.append((label, weight, f"{frac:.9f}"))
            per_weight.setdefault(weight, []).append(frac)
    if args.stats_out:
        _write_rows(args.stats_out, ("trace", "weight", "change_fraction"), stats_rows)

    if args.series_out:
        series_rows = []
        for label, trace, instance in pairs:
            starts, series = experiments.position_change_series(trace, instance, args.window)
            for weight, values in sorted(series.items()):
                for start, value in zip(starts, values):
                    series_rows.append((label, int(start), weight, f"{value:.9f}"))
        _write_rows(
            args.series_out,
            ("trace", "window_start", "weight", "change_fraction"),
            series_rows,
        )

    weights = sorted(per_weight)
    mean_fracs = [float(np.mean(per_weight[w])) for w in weights]
    for weight, frac in zip(weights, mean_fracs):
        print(f"weight {weight}: mean change fraction {frac:.4f}")
    if len(weights) >= 3:
        r, p = experiments.pearson([float(w) for w in weights], mean_fracs)
        print(f"pearson r={r:.4f} p={p:.4g} over {len(weights)} weight classes")
        if args.pearson_out:
            _write_rows(args.pearson_out, ("n", "r", "p"), [(len(weights), f"{r:.9f}", f"{p:.6g}")])
    elif args.pearson_out:
        raise ParseError("need at least 3 weight classes for a correlation")
    return 0


# --- report ---


def cmd_report(args) -> int:
    results: dict[str, list[tuple[str, int]]] = {}
    with open(args.results, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{args.results} is empty")
        method_col = "method" if "method" in reader.fieldnames else "algorithm"
        for col in (method_col, "instance_id", "best_twt"):
            if col not in reader.fieldnames:
                raise ParseError(f"{args.results} lacks required column {col!r}")
        for row in reader:
            results.setdefault(row[method_col], []).append(
                (row["instance_id"], int(row["best_twt"]))
            )
    reference = load_reference_file(args.reference)
    combos = None
    if args.manifest:
        combos = {
            instance.id: (tf, rdd)
            for instance, tf, rdd, _ in _read_manifest(args.manifest)
        }
    report = experiments.deviation_report(results, reference, combos=combos)

    for method, mean, deviation in report.summary_rows():
        if deviation is None:
            print(f"{method}: mean_twt={mean:.1f} (deviation unavailable)")
        else:
            print(f"{method}: mean_twt={mean:.1f} diff to reference {deviation * 100:+.1f}%")
    if report.flagged:
        print(f"flagged (no reference value): {len(report.flagged)} row(s)", file=sys.stderr)

    if args.out:
        _write_rows(
            args.out,
            ("method", "mean_twt", "deviation"),
            (
                (m, f"{mean:.6f}", "" if dev is None else f"{dev:.9f}")
                for m, mean, dev in report.summary_rows()
            ),
        )
    if args.combo_out:
        if report.per_combo is None:
            raise UsageError("--combo-out needs --manifest for the (tf, rdd) mapping")
        rows = []
        for (tf, rdd), devs in sorted(report.per_combo.items()):
            for method, dev in sorted(devs.items()):
                rows.append((_fmt(tf), _fmt(rdd), method, f"{dev:.9f}"))
        _write_rows(args.combo_out, ("tf", "rdd", "method", "deviation"), rows)
    return 0


# --- parser wiring ---


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(
        prog="smtwt-aco",
        description="Ant colony solvers and experiment harness for "
                    "single-machine total weighted tardiness scheduling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("generate", help="generate benchmark instances")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=100, help="jobs per instance (default 100)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--full-set", action="store_true",
                   help="one batch per (TF, RDD) grid cell")
    p.add_argument("--per-combo", type=int, default=5,
                   help="instances per grid cell with --full-set (default 5)")
    p.add_argument("--tf", type=float, default=None, help="tardiness factor")
    p.add_argument("--rdd", type=float, default=None, help="relative due-date range")
    p.add_argument("--count", type=int, default=1,
                   help="instances for a single (tf, rdd) cell (default 1)")
    p.add_argument("--allow-offgrid", action="store_true",
                   help="accept tf/rdd values outside the standard grid")
    p.add_argument("--p-min", type=int, default=1)
    p.add_argument("--p-max", type=int, default=100)
    p.add_argument("--w-min", type=int, default=1)
    p.add_argument("--w-max", type=int, default=10)
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.set_defaults(func=cmd_generate)
    commands["generate"] = p

    p = sub.add_parser("solve", help="run one solver on one instance")
    p.add_argument("instance", help="instance file (whitespace-separated integers)")
    p.add_argument("--n", type=int, default=None,
                   help="jobs per instance (inferred for single-instance files)")
    p.add_argument("--index", type=int, default=0,
                   help="which instance within the file (default 0)")
    _add_solver_flags(p)
    p.add_argument("--record-schedules", action="store_true",
                   help="keep the iteration-best schedule per iteration in the trace")
    p.add_argument("--trace", default=None, help="write per-iteration trace CSV here")
    p.add_argument("--out", default=None, help="write result record (JSON) here")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit timestamp and zero wall-clock fields for reproducible bytes")
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.set_defaults(func=cmd_solve)
    commands["solve"] = p

    p = sub.add_parser("sweep", help="full parameter-grid sweep")
    p.add_argument("files", nargs="*", help="instance files")
    p.add_argument("--manifest", default=None, help="directory with manifest.csv")
    p.add_argument("--n", type=int, default=None, help="jobs per instance for bare files")
    p.add_argument("--algo", default="both", choices=("paco", "wpaco", "both"))
    p.add_argument("--reps", type=int, default=5, help="repetitions per cell (default 5)")
    _add_solver_flags(p, include_algo=False)
    p.add_argument("--q0-grid", type=_float_list, default=experiments.Q0_GRID)
    p.add_argument("--tau-max-grid", type=_float_list, default=experiments.TAU_MAX_GRID)
    p.add_argument("--k-grid", type=_int_list, default=None,
                   help="population capacities (default: 1,5,25 paco / 10,50,100 wpaco)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--no-timestamp", action="store_true",
                   help="zero wall-clock fields for reproducible bytes")
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.set_defaults(func=cmd_sweep)
    commands["sweep"] = p

    p = sub.add_parser("tune", help="race alpha/beta lattice points per instance")
    p.add_argument("files", nargs="*", help="instance files")
    p.add_argument("--manifest", default=None, help="directory with manifest.csv")
    p.add_argument("--n", type=int, default=None, help="jobs per instance for bare files")
    _add_solver_flags(p)
    p.add_argument("--budget", type=int, default=2000,
                   help="max solver runs per instance (default 2000)")
    p.add_argument("--initial-configs", type=int, default=16)
    p.add_argument("--seeds-per-round", type=int, default=5)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.set_defaults(func=cmd_tune)
    commands["tune"] = p

    p = sub.add_parser("analyze", help="position-change analysis of solve traces")
    p.add_argument("--trace", action="append", default=[], help="trace CSV (repeatable)")
    p.add_argument("--instance", action="append", default=[],
                   help="instance file matching each --trace")
    p.add_argument("--n", type=int, default=None, help="jobs per instance for bare files")
    p.add_argument("--window", type=int, default=100,
                   help="iterations per series window (default 100)")
    p.add_argument("--stats-out", default=None, help="per-weight change fractions CSV")
    p.add_argument("--series-out", default=None, help="windowed series CSV")
    p.add_argument("--pearson-out", default=None, help="weight-vs-fraction correlation CSV")
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.set_defaults(func=cmd_analyze)
    commands["analyze"] = p

    p = sub.add_parser("report", help="compare result rows against reference values")
    p.add_argument("--results", required=True,
                   help="CSV with method/algorithm, instance_id, best_twt columns")
    p.add_argument("--reference", required=True, help="CSV with header id,best_twt")
    p.add_argument("--manifest", default=None,
                   help="directory with manifest.csv for the per-(tf, rdd) breakdown")
    p.add_argument("--out", default=None, help="summary CSV")
    p.add_argument("--combo-out", default=None, help="per-(tf, rdd) deviation CSV")
    p.add_argument("--config", default=None, help="key = value defaults file")
    p.set_defaults(func=cmd_report)
    commands["report"] = p

    return parser, commands


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(commands[args.command], args, argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
