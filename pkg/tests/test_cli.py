import csv
import json
import os

import pytest

from smtwt_aco.cli import main
from smtwt_aco.instances import GeneratorConfig, generate_instance, serialize_instance


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture
def instance_file(tmp_path):
    inst = generate_instance(GeneratorConfig(n=6, tf=0.6, rdd=0.6, seed=31))
    path = tmp_path / "inst6.txt"
    path.write_text(serialize_instance(inst))
    return path


@pytest.fixture
def generated_dir(tmp_path):
    out = tmp_path / "gen"
    assert run_cli("generate", "--out", out, "--full-set", "--per-combo", 1,
                   "--n", 6, "--seed", 3) == 0
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestGenerate:
    def test_full_set_counts_and_manifest(self, tmp_path):
        out = tmp_path / "set"
        assert run_cli("generate", "--out", out, "--full-set", "--per-combo", 2,
                       "--n", 5, "--seed", 1) == 0
        rows = read_csv(out / "manifest.csv")
        assert rows[0] == ["id", "tf", "rdd", "seed", "n"]
        assert len(rows) - 1 == 50
        for row in rows[1:]:
            assert (out / (row[0] + ".txt")).exists()

    def test_single_cell(self, tmp_path):
        out = tmp_path / "one"
        assert run_cli("generate", "--out", out, "--tf", 0.6, "--rdd", 0.6,
                       "--n", 10, "--seed", 4) == 0
        rows = read_csv(out / "manifest.csv")
        assert len(rows) - 1 == 1

    def test_offgrid_rejected_then_allowed(self, tmp_path):
        out = tmp_path / "off"
        assert run_cli("generate", "--out", out, "--tf", 0.3, "--rdd", 0.6) == 1
        assert run_cli("generate", "--out", out, "--tf", 0.3, "--rdd", 0.6,
                       "--n", 5, "--allow-offgrid") == 0

    def test_idempotent_bytes(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            run_cli("generate", "--out", out, "--full-set", "--per-combo", 1,
                    "--n", 5, "--seed", 9)
        for name in os.listdir(out_a):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestSolve:
    def test_writes_result_and_trace(self, instance_file, tmp_path):
        result = tmp_path / "res.json"
        trace = tmp_path / "trace.csv"
        code = run_cli("solve", instance_file, "--algo", "paco", "--iterations", 20,
                       "--ants", 3, "--seed", 7, "--out", result, "--trace", trace,
                       "--record-schedules")
        assert code == 0
        record = json.loads(result.read_text())
        assert record["algorithm"] == "paco"
        assert record["seed"] == 7
        assert sorted(record["best_schedule"]) == [1, 2, 3, 4, 5, 6]
        rows = read_csv(trace)
        assert rows[0] == ["iteration", "iter_best_twt", "best_so_far_twt", "iter_best_schedule"]
        assert len(rows) - 1 == 20

    def test_missing_file_is_data_error(self, tmp_path):
        assert run_cli("solve", tmp_path / "nope.txt") == 2

    def test_deterministic_bytes_with_no_timestamp(self, instance_file, tmp_path):
        outs = []
        for tag in ("x", "y"):
            result = tmp_path / f"res_{tag}.json"
            run_cli("solve", instance_file, "--iterations", 15, "--seed", 3,
                    "--out", result, "--no-timestamp")
            outs.append(result.read_bytes())
        assert outs[0] == outs[1]

    def test_config_file_defaults_and_override(self, instance_file, tmp_path):
        cfgfile = tmp_path / "solver.cfg"
        cfgfile.write_text("iterations = 12\nalgo = paco\nseed = 5\n")
        result = tmp_path / "res.json"
        assert run_cli("solve", instance_file, "--config", cfgfile, "--seed", 8,
                       "--out", result, "--no-timestamp") == 0
        record = json.loads(result.read_text())
        assert record["config"]["iterations"] == 12   # from file
        assert record["algorithm"] == "paco"          # from file
        assert record["seed"] == 8                    # flag wins

    def test_unknown_config_key_is_usage_error(self, instance_file, tmp_path):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("warp_drive = on\n")
        assert run_cli("solve", instance_file, "--config", cfgfile) == 1


class TestSweep:
    def test_row_counts_and_schema(self, generated_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run_cli("sweep", "--manifest", generated_dir, "--algo", "both",
                       "--reps", 1, "--iterations", 3, "--ants", 2,
                       "--q0-grid", "0.1,0.9", "--tau-max-grid", "1", "--k-grid", "2",
                       "--out", out, "--no-timestamp")
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["algorithm", "instance_id", "q0", "tau_max", "k",
                           "rep", "seed", "best_twt", "wall_ms"]
        # 25 instances x 2 q0 x 1 tau_max x 1 k x 1 rep x 2 algorithms
        assert len(rows) - 1 == 100
        assert {row[0] for row in rows[1:]} == {"paco", "wpaco"}

    def test_idempotent_bytes(self, generated_dir, tmp_path):
        outs = []
        for tag in ("p", "q"):
            out = tmp_path / f"sweep_{tag}.csv"
            run_cli("sweep", "--manifest", generated_dir, "--algo", "paco",
                    "--reps", 1, "--iterations", 2, "--ants", 1,
                    "--q0-grid", "0.1", "--tau-max-grid", "1", "--k-grid", "2",
                    "--out", out, "--no-timestamp")
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_needs_instances(self, tmp_path):
        assert run_cli("sweep", "--out", tmp_path / "s.csv") == 1


class TestTune:
    def test_writes_per_instance_rows(self, instance_file, tmp_path):
        out = tmp_path / "tune.csv"
        code = run_cli("tune", instance_file, "--algo", "paco", "--budget", 12,
                       "--initial-configs", 3, "--seeds-per-round", 1,
                       "--iterations", 2, "--ants", 1, "--out", out)
        assert code == 0
        rows = read_csv(out)
        assert rows[0] == ["instance_id", "alpha", "beta", "mean_twt", "runs_used"]
        assert len(rows) - 1 == 1
        alpha, beta = float(rows[1][1]), float(rows[1][2])
        assert 0.5 <= alpha <= 3.0 and 0.5 <= beta <= 3.0
        assert int(rows[1][4]) <= 12


class TestAnalyzeAndReport:
    def test_analyze_stats_series_pearson(self, instance_file, tmp_path):
        trace = tmp_path / "trace.csv"
        run_cli("solve", instance_file, "--iterations", 30, "--seed", 2,
                "--trace", trace, "--record-schedules")
        stats_out = tmp_path / "stats.csv"
        series_out = tmp_path / "series.csv"
        pearson_out = tmp_path / "pearson.csv"
        code = run_cli("analyze", "--trace", trace, "--instance", instance_file,
                       "--window", 10, "--stats-out", stats_out,
                       "--series-out", series_out, "--pearson-out", pearson_out)
        assert code == 0
        stats_rows = read_csv(stats_out)
        assert stats_rows[0] == ["trace", "weight", "change_fraction"]
        assert all(0.0 <= float(r[2]) <= 1.0 for r in stats_rows[1:])
        series_rows = read_csv(series_out)
        assert series_rows[0] == ["trace", "window_start", "weight", "change_fraction"]
        pearson_rows = read_csv(pearson_out)
        assert pearson_rows[0] == ["n", "r", "p"]
        assert -1.0 <= float(pearson_rows[1][1]) <= 1.0

    def test_analyze_requires_schedules(self, instance_file, tmp_path):
        trace = tmp_path / "bare.csv"
        run_cli("solve", instance_file, "--iterations", 5, "--trace", trace)
        assert run_cli("analyze", "--trace", trace, "--instance", instance_file) == 2

    def test_report_summary_and_combo(self, generated_dir, tmp_path):
        results = tmp_path / "results.csv"
        with open(results, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "instance_id", "best_twt"])
            manifest = read_csv(generated_dir / "manifest.csv")[1:]
            for row in manifest:
                writer.writerow(["m_slow", row[0], 120])
                writer.writerow(["m_fast", row[0], 100])
        reference = tmp_path / "ref.csv"
        with open(reference, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "best_twt"])
            for row in read_csv(generated_dir / "manifest.csv")[1:]:
                writer.writerow([row[0], 100])
        out = tmp_path / "summary.csv"
        combo_out = tmp_path / "combos.csv"
        code = run_cli("report", "--results", results, "--reference", reference,
                       "--manifest", generated_dir, "--out", out,
                       "--combo-out", combo_out)
        assert code == 0
        rows = {r[0]: r for r in read_csv(out)[1:]}
        assert float(rows["m_fast"][2]) == pytest.approx(0.0)
        assert float(rows["m_slow"][2]) == pytest.approx(0.2)
        combo_rows = read_csv(combo_out)
        assert combo_rows[0] == ["tf", "rdd", "method", "deviation"]
        assert len(combo_rows) - 1 == 25 * 2

    def test_report_rejects_bad_results_schema(self, tmp_path):
        results = tmp_path / "res.csv"
        results.write_text("foo,bar\n1,2\n")
        reference = tmp_path / "ref.csv"
        reference.write_text("id,best_twt\na,1\n")
        assert run_cli("report", "--results", results, "--reference", reference) == 2


class TestUsageErrors:
    def test_unknown_subcommand(self):
        assert run_cli("frobnicate") == 1

    def test_solve_bad_index(self, instance_file):
        assert run_cli("solve", instance_file, "--index", 5) == 1
