import numpy as np
import pytest
import scipy.stats

from smtwt_aco.experiments import (
    AnalysisReport,
    SweepSpec,
    TuneSpec,
    aggregate_sweep,
    deviation_report,
    marginal_mean,
    overall_change_fraction,
    pearson,
    position_change_series,
    position_change_stats,
    pvalue_from_r,
    sweep,
    tune_alpha_beta,
)
from smtwt_aco.instances import load_reference
from smtwt_aco.model import Instance
from smtwt_aco.solver import RunTrace, SolverConfig

from helpers import random_instance


def tiny_base(algorithm="paco", **kw):
    defaults = dict(algorithm=algorithm, ants=2, iterations=4, seed=99, check_every=0)
    defaults.update(kw)
    return SolverConfig(**defaults)


def make_trace(schedule_rows):
    rows = np.asarray(schedule_rows, dtype=np.int32)
    t = rows.shape[0]
    return RunTrace(
        iteration_best=np.zeros(t, dtype=np.int64),
        best_so_far=np.zeros(t, dtype=np.int64),
        schedules=rows,
    )


@pytest.fixture
def mini_instances():
    rng = np.random.default_rng(12)
    return [random_instance(rng, 5, id=f"mini{i}") for i in range(2)]


class TestSweep:
    def test_combo_count_is_27(self):
        spec = SweepSpec(base=tiny_base())
        assert len(spec.combos("paco")) == 27
        assert len(spec.combos("wpaco")) == 27
        assert {k for _, _, k in spec.combos("paco")} == {1, 5, 25}
        assert {k for _, _, k in spec.combos("wpaco")} == {10, 50, 100}

    def test_row_count(self, mini_instances):
        spec = SweepSpec(base=tiny_base(), repetitions=2)
        rows = sweep(mini_instances, spec)
        assert len(rows) == 2 * 27 * 2

    def test_deterministic_and_sorted(self, mini_instances):
        spec = SweepSpec(base=tiny_base(), repetitions=1)
        a = sweep(mini_instances, spec)
        b = sweep(mini_instances, spec)
        strip = lambda rows: [
            (r.algorithm, r.instance_id, r.q0, r.tau_max, r.k, r.rep, r.seed, r.best_twt)
            for r in rows
        ]
        assert strip(a) == strip(b)
        assert strip(a) == sorted(strip(a))

    def test_parallel_equals_sequential(self, mini_instances):
        spec = SweepSpec(base=tiny_base(), repetitions=1)
        seq = sweep(mini_instances, spec, jobs=1)
        par = sweep(mini_instances, spec, jobs=2)
        assert [r.best_twt for r in seq] == [r.best_twt for r in par]
        assert [r.seed for r in seq] == [r.seed for r in par]

    def test_single_combo_aggregate_deviation_zero(self, mini_instances):
        spec = SweepSpec(
            base=tiny_base(), q0_grid=(0.1,), tau_max_grid=(1.0,), k_grid=(5,),
            repetitions=2,
        )
        rows = sweep(mini_instances, spec)
        agg = aggregate_sweep(rows)
        assert len(agg) == 1
        assert agg[0].rel_deviation == 0.0

    def test_marginal_mean_shape(self, mini_instances):
        spec = SweepSpec(base=tiny_base(), repetitions=1)
        rows = sweep(mini_instances, spec)
        by_q0 = marginal_mean(rows, "q0")
        assert set(by_q0) == {"paco"}
        assert set(by_q0["paco"]) == {0.1, 0.5, 0.9}
        total_rows = {q0: 0 for q0 in (0.1, 0.5, 0.9)}
        for r in rows:
            total_rows[r.q0] += 1
        assert all(v == 18 for v in total_rows.values())

    def test_rejects_unknown_marginal(self, mini_instances):
        with pytest.raises(ValueError):
            marginal_mean([], "alpha")


class TestTuner:
    def test_budget_respected_and_on_lattice(self, mini_instances):
        spec = TuneSpec(budget=40, initial_configs=8, seeds_per_round=2, seed=5)
        calls = []

        def objective(alpha, beta, seed):
            calls.append((alpha, beta, seed))
            return (alpha - 1.7) ** 2 + (beta - 2.3) ** 2

        result = tune_alpha_beta(mini_instances[0], spec, tiny_base(), objective=objective)
        assert len(calls) <= spec.budget
        assert result.runs_used == len(calls)
        for alpha, beta, _ in calls:
            assert 0.5 <= alpha <= 3.0 and 0.5 <= beta <= 3.0
            assert abs((alpha - 0.5) / 0.001 - round((alpha - 0.5) / 0.001)) < 1e-6
            assert abs((beta - 0.5) / 0.001 - round((beta - 0.5) / 0.001)) < 1e-6

    def test_dominant_point_wins(self, mini_instances):
        spec = TuneSpec(budget=60, initial_configs=6, seeds_per_round=2, seed=8)
        evaluated = {}

        def objective(alpha, beta, seed):
            score = (alpha - 1.0) ** 2 + (beta - 1.0) ** 2  # seed-independent
            evaluated[(alpha, beta)] = score
            return score

        result = tune_alpha_beta(mini_instances[0], spec, tiny_base(), objective=objective)
        assert (result.alpha, result.beta) == min(evaluated, key=evaluated.get)

    def test_deterministic(self, mini_instances):
        spec = TuneSpec(budget=30, initial_configs=4, seeds_per_round=1, seed=3)
        base = tiny_base(iterations=2, ants=1)
        a = tune_alpha_beta(mini_instances[0], spec, base)
        b = tune_alpha_beta(mini_instances[0], spec, base)
        assert (a.alpha, a.beta) == (b.alpha, b.beta)
        assert a.mean_twt == b.mean_twt

    def test_rejects_tiny_budget(self):
        with pytest.raises(ValueError):
            TuneSpec(budget=5)


class TestPositionChanges:
    def test_constant_trace_all_zero(self):
        inst = Instance.from_arrays([1, 1, 1], [1, 1, 1], [2, 5, 5])
        trace = make_trace([[0, 1, 2]] * 4)
        assert position_change_stats(trace, inst) == {2: 0.0, 5: 0.0}

    def test_full_alternation_all_one(self):
        inst = Instance.from_arrays([1, 1], [1, 1], [3, 7])
        trace = make_trace([[0, 1], [1, 0], [0, 1]])
        assert position_change_stats(trace, inst) == {3: 1.0, 7: 1.0}

    def test_hand_counted_example(self):
        # jobs 0 and 1 share weight 5 and swap twice over three transitions;
        # job 2 (weight 7) never moves
        inst = Instance.from_arrays([1, 1, 1], [1, 1, 1], [5, 5, 7])
        trace = make_trace([[0, 1, 2], [1, 0, 2], [1, 0, 2], [0, 1, 2]])
        stats = position_change_stats(trace, inst)
        assert stats[5] == pytest.approx(2 / 3)
        assert stats[7] == 0.0

    def test_requires_schedules(self):
        inst = Instance.from_arrays([1], [1], [1])
        trace = RunTrace(
            iteration_best=np.zeros(3, dtype=np.int64),
            best_so_far=np.zeros(3, dtype=np.int64),
            schedules=None,
        )
        with pytest.raises(ValueError):
            position_change_stats(trace, inst)

    def test_requires_two_iterations(self):
        inst = Instance.from_arrays([1], [1], [1])
        with pytest.raises(ValueError):
            position_change_stats(make_trace([[0]]), inst)

    def test_series_full_window_equals_stats(self):
        rng = np.random.default_rng(2)
        inst = random_instance(rng, 6)
        rows = [list(rng.permutation(6)) for _ in range(9)]
        trace = make_trace(rows)
        stats = position_change_stats(trace, inst)
        starts, series = position_change_series(trace, inst, window=8)
        assert list(starts) == [1]
        for w, vals in series.items():
            assert vals[0] == pytest.approx(stats[w])

    def test_series_window_one_is_indicator_mean(self):
        inst = Instance.from_arrays([1, 1, 1], [1, 1, 1], [5, 5, 7])
        trace = make_trace([[0, 1, 2], [1, 0, 2], [1, 0, 2]])
        starts, series = position_change_series(trace, inst, window=1)
        assert list(starts) == [1, 2]
        assert list(series[5]) == [1.0, 0.0]
        assert list(series[7]) == [0.0, 0.0]

    def test_constant_trace_series_all_zero(self):
        inst = Instance.from_arrays([1, 1], [1, 1], [1, 9])
        _, series = position_change_series(make_trace([[0, 1]] * 10), inst, window=3)
        assert all(np.all(vals == 0.0) for vals in series.values())

    def test_class_weighted_aggregate_matches_overall(self):
        rng = np.random.default_rng(14)
        inst = random_instance(rng, 8)
        rows = [list(rng.permutation(8)) for _ in range(15)]
        trace = make_trace(rows)
        stats = position_change_stats(trace, inst)
        weights = inst.weights
        total = sum(stats[int(w)] * int((weights == w).sum()) for w in set(weights.tolist()))
        assert total / inst.n == pytest.approx(overall_change_fraction(trace))


class TestPearson:
    def test_perfect_negative(self):
        r, p = pearson([1, 2, 3], [3, 2, 1])
        assert r == pytest.approx(-1.0)
        assert p == 0.0

    def test_perfect_positive(self):
        r, _ = pearson([1, 2, 3], [1, 2, 3])
        assert r == pytest.approx(1.0)

    def test_hand_computed(self):
        r, _ = pearson([1, 2, 3, 4], [2, 1, 4, 3])
        assert r == pytest.approx(0.6)

    def test_rejects_short_input(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [3, 4])

    def test_rejects_zero_variance(self):
        with pytest.raises(ValueError):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(ValueError):
            pearson([1, 2, 3], [2, 2, 2])

    def test_matches_scipy_on_random_inputs(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(3, 40))
            x = rng.normal(size=n)
            y = rng.normal(size=n) + 0.4 * x
            r, p = pearson(x, y)
            r_ref, p_ref = scipy.stats.pearsonr(x, y)
            assert r == pytest.approx(r_ref, abs=1e-12)
            assert p == pytest.approx(p_ref, rel=1e-10, abs=1e-300)

    def test_extreme_negative_correlation_magnitude(self):
        # ten weight classes, near-perfect negative trend: p lands around 1e-8
        p = pvalue_from_r(-0.994, 10)
        assert p == pytest.approx(
            2 * scipy.stats.t.sf(0.994 * np.sqrt(8 / (1 - 0.994**2)), 8), rel=1e-10
        )
        assert 1e-9 < p < 1e-8


class TestDeviationReport:
    def test_percentages_match_presentation(self):
        # one-decimal presentation of the stored fraction
        results = {"m1": [("a", 225641)], "m2": [("a", 274140)]}
        reference = load_reference("id,best_twt\na,217851\n")
        report = deviation_report(results, reference)
        assert round(report.deviation["m1"] * 100, 1) == 3.6
        assert round(report.deviation["m2"] * 100, 1) == 25.8

    def test_equal_means_zero_deviation(self):
        results = {"m": [("a", 100), ("b", 300)]}
        reference = load_reference("id,best_twt\na,100\nb,300\n")
        report = deviation_report(results, reference)
        assert report.deviation["m"] == pytest.approx(0.0)

    def test_missing_reference_flagged_and_excluded(self):
        results = {"m": [("a", 100), ("ghost", 999)]}
        reference = load_reference("id,best_twt\na,100\n")
        report = deviation_report(results, reference)
        assert report.flagged == (("m", "ghost"),)
        assert report.method_mean["m"] == 100.0

    def test_empty_reference_reports_unavailable(self):
        results = {"m": [("a", 100)]}
        report = deviation_report(results, load_reference(""))
        assert report.ref_mean is None
        assert report.deviation is None
        assert report.method_mean["m"] == 100.0

    def test_per_combo_breakdown(self):
        results = {
            "m": [("a", 110), ("a", 130), ("b", 330)],
        }
        reference = load_reference("id,best_twt\na,100\nb,300\n")
        combos = {"a": (0.2, 0.4), "b": (0.6, 0.8)}
        report = deviation_report(results, reference, combos=combos)
        assert report.per_combo[(0.2, 0.4)]["m"] == pytest.approx(0.2)
        assert report.per_combo[(0.6, 0.8)]["m"] == pytest.approx(0.1)

    def test_include_ids_filter(self):
        results = {"m": [("a", 100), ("b", 900)]}
        reference = load_reference("id,best_twt\na,100\nb,300\n")
        report = deviation_report(results, reference, include_ids=["a"])
        assert report.method_mean["m"] == 100.0

    def test_summary_rows_sorted(self):
        results = {"z": [("a", 1)], "a": [("a", 2)]}
        reference = load_reference("id,best_twt\na,1\n")
        report = deviation_report(results, reference)
        assert [m for m, _, _ in report.summary_rows()] == ["a", "z"]
