import numpy as np
import pytest

from ndsal.harness import (
    ALConfig,
    PoolState,
    derive_seed,
    f1_scores,
    generate_synthetic,
    init_balanced,
    macro_f1,
    preset_counts,
    records_json_rows,
    run_cycle,
    run_experiment,
    run_repetition,
    select_once,
    split_stratified,
    write_plot_data,
    write_records,
    write_summary,
)
from ndsal.numerics import FeatureMatrix


def small_data(seed=1, per_class=80, dim=4, spread=0.5):
    return generate_synthetic((per_class, per_class), dim, spread, seed)


def small_config(strategy="random", **kwargs):
    base = dict(
        strategy=strategy,
        draw_size=10,
        initial_size=20,
        budget=60,
        k=2,
        epochs=5,
        repetitions=2,
        master_seed=7,
    )
    base.update(kwargs)
    return ALConfig(**base)


class TestPresetCounts:
    def test_four_class_imbalance_at_2000(self):
        assert preset_counts("twitter-abusive", 2000) == (480, 94, 296, 1130)

    def test_binary_imbalance(self):
        assert preset_counts("wiki-attack", 1000) == (117, 883)

    def test_counts_always_sum_to_n(self):
        for n in (97, 500, 1234, 2001):
            assert sum(preset_counts("twitter-abusive", n)) == n
            assert sum(preset_counts("wiki-attack", n)) == n

    def test_balanced_preset(self):
        assert preset_counts("balanced", 100, 4) == (25, 25, 25, 25)

    def test_unknown_preset_rejected(self):
        with pytest.raises(ValueError, match="preset"):
            preset_counts("mystery", 10)


class TestGenerateSynthetic:
    def test_counts_match_request(self):
        features, labels = generate_synthetic((30, 10, 20), 5, 0.4, seed=3)
        assert features.n_samples == 60
        assert np.bincount(labels).tolist() == [30, 10, 20]

    def test_same_seed_identical(self):
        a, _ = generate_synthetic((20, 20), 6, 0.5, seed=11)
        b, _ = generate_synthetic((20, 20), 6, 0.5, seed=11)
        assert np.array_equal(a.data, b.data)

    def test_centers_respect_min_distance(self):
        features, labels = generate_synthetic((40, 40), 2, 0.3, seed=5, min_center_distance=9.0)
        c0 = features.data[labels == 0].mean(axis=0)
        c1 = features.data[labels == 1].mean(axis=0)
        assert np.linalg.norm(c0 - c1) > 8.0

    def test_balanced_binary(self):
        _, labels = generate_synthetic((15, 15), 3, 0.2, seed=0)
        assert (labels == 0).sum() == (labels == 1).sum()


class TestSplitAndInit:
    def test_split_is_stratified(self):
        _, labels = small_data()
        train_ids, test_ids = split_stratified(labels, 0.2, seed=2)
        assert len(train_ids) + len(test_ids) == len(labels)
        for k in (0, 1):
            assert sum(1 for s in test_ids if labels[s] == k) == 16

    def test_init_balanced_exact_per_class(self):
        _, labels = small_data()
        train_ids, test_ids = split_stratified(labels, 0.2, seed=2)
        state = init_balanced(labels, train_ids, test_ids, 20, 2, seed=3)
        for k in (0, 1):
            assert sum(1 for s in state.labeled_ids if labels[s] == k) == 10
        assert len(state.labeled_ids) + len(state.pool_ids) == len(train_ids)

    def test_one_per_class_minimal_seed(self):
        _, labels = small_data()
        train_ids, test_ids = split_stratified(labels, 0.2, seed=2)
        state = init_balanced(labels, train_ids, test_ids, 2, 2, seed=3)
        assert len(state.labeled_ids) == 2

    def test_insufficient_class_population_rejected(self):
        labels = np.array([0, 0, 0, 1])
        with pytest.raises(ValueError, match="class 1"):
            init_balanced(labels, (0, 1, 2, 3), (), 4, 2, seed=0)

    def test_pool_state_disjointness_enforced(self):
        with pytest.raises(ValueError, match="disjoint"):
            PoolState(labeled_ids=(1, 2), pool_ids=(2, 3), test_ids=())


class TestMacroF1:
    def test_perfect_predictions(self):
        assert macro_f1([0, 1, 2, 1], [0, 1, 2, 1], 3) == 1.0

    def test_hand_computed_binary_case(self):
        assert macro_f1([1, 0, 0, 0], [1, 1, 0, 0], 2) == pytest.approx(0.73333333, abs=1e-6)

    def test_all_one_class_on_balanced_truth(self):
        assert macro_f1([0, 0, 0, 0], [0, 0, 1, 1], 2) == pytest.approx(1.0 / 3.0)

    def test_absent_class_warns_and_scores_zero(self):
        with pytest.warns(UserWarning, match="class 2"):
            score = macro_f1([0, 1], [0, 1], 3)
        assert score == pytest.approx(2.0 / 3.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            macro_f1([], [], 2)

    def test_per_class_values(self):
        per_class = f1_scores([1, 0, 0, 0], [1, 1, 0, 0], 2)
        assert per_class[0] == pytest.approx(0.8)
        assert per_class[1] == pytest.approx(2.0 / 3.0)


class TestRunCycle:
    def test_conservation_and_growth(self):
        features, labels = small_data()
        config = small_config()
        run = run_repetition(features, labels, config, repetition=0)
        counts = [row.labeled_count for row in run.rows]
        assert counts == [20, 30, 40, 50, 60]
        assert counts[-1] == config.budget

    def test_determinism_across_reruns(self):
        features, labels = small_data()
        config = small_config(strategy="nds", budget=40, k=2, draw_size=10)
        a = run_repetition(features, labels, config, repetition=0)
        b = run_repetition(features, labels, config, repetition=0)
        assert [r.macro_f1 for r in a.rows] == [r.macro_f1 for r in b.rows]

    def test_no_test_leakage_and_pool_conservation(self):
        features, labels = small_data()
        train_ids, test_ids = split_stratified(labels, 0.2, seed=5)
        state = init_balanced(labels, train_ids, test_ids, 20, 2, seed=5)
        config = small_config()
        total = set(state.labeled_ids) | set(state.pool_ids)
        for _ in range(2):
            state, _ = run_cycle(features, labels, state, config)
            assert set(state.labeled_ids) | set(state.pool_ids) == total
            assert not set(state.labeled_ids) & set(state.test_ids)

    def test_rejects_exhausted_budget(self):
        features, labels = small_data()
        train_ids, test_ids = split_stratified(labels, 0.2, seed=5)
        state = init_balanced(labels, train_ids, test_ids, 20, 2, seed=5)
        config = small_config(budget=20)
        with pytest.raises(ValueError, match="budget"):
            run_cycle(features, labels, state, config)


class TestRunExperiment:
    def test_aggregate_shape_and_grid(self):
        features, labels = small_data()
        result = run_experiment(small_config(), data=(features, labels))
        counts = [row["labeled_count"] for row in result.aggregate()]
        assert counts == [20, 30, 40, 50, 60]
        assert all(row["repetitions"] == 2 for row in result.aggregate())

    def test_strategies_share_the_labeled_grid(self):
        features, labels = small_data()
        random_result = run_experiment(small_config("random"), data=(features, labels))
        margin_result = run_experiment(small_config("minmargin"), data=(features, labels))
        grid_a = [r["labeled_count"] for r in random_result.aggregate()]
        grid_b = [r["labeled_count"] for r in margin_result.aggregate()]
        assert grid_a == grid_b

    def test_easy_instance_high_f1_at_budget(self):
        result = run_experiment(
            small_config(repetitions=3, epochs=25),
            preset="balanced",
            n_samples=160,
            dim=4,
            spread=0.5,
            min_center_distance=6.0,  # 12x the spread: genuinely separable
        )
        assert result.mean_f1_at(60) >= 0.95

    def test_added_repetition_never_perturbs_earlier_ones(self):
        features, labels = small_data()
        two = run_experiment(small_config(repetitions=2), data=(features, labels))
        three = run_experiment(small_config(repetitions=3), data=(features, labels))
        for run_a, run_b in zip(two.runs, three.runs):
            assert [r.macro_f1 for r in run_a.rows] == [r.macro_f1 for r in run_b.rows]


class TestFrozenClusters:
    def test_freeze_flag_runs_and_is_deterministic(self):
        features, labels = small_data()
        config = small_config(strategy="nds", budget=50, recluster_each_cycle=False)
        a = run_repetition(features, labels, config, repetition=0)
        b = run_repetition(features, labels, config, repetition=0)
        assert [r.labeled_count for r in a.rows] == [20, 30, 40, 50]
        assert [r.macro_f1 for r in a.rows] == [r.macro_f1 for r in b.rows]

    def test_freeze_can_differ_from_reclustering(self):
        features, labels = small_data()
        frozen = run_repetition(
            features, labels, small_config(strategy="nds", recluster_each_cycle=False), 0
        )
        fresh = run_repetition(
            features, labels, small_config(strategy="nds", recluster_each_cycle=True), 0
        )
        assert len(frozen.rows) == len(fresh.rows)


class TestExperimentFailure:
    def test_partial_results_carried_on_failure(self, monkeypatch):
        import ndsal.harness as harness_module

        features, labels = small_data()
        real = harness_module.run_repetition

        def flaky(f, l, config, repetition):
            if repetition == 1:
                raise ValueError("synthetic failure")
            return real(f, l, config, repetition)

        monkeypatch.setattr(harness_module, "run_repetition", flaky)
        with pytest.raises(harness_module.ExperimentFailure) as err:
            harness_module.run_experiment(small_config(repetitions=3), data=(features, labels))
        assert err.value.repetition == 1
        assert len(err.value.partial.runs) == 1
        assert err.value.partial.runs[0].rows


class TestSeedDerivation:
    def test_distinct_purposes_distinct_seeds(self):
        seeds = {derive_seed(1, 0, 0, p) for p in ("data", "split", "train", "draw")}
        assert len(seeds) == 4

    def test_stable_across_calls(self):
        assert derive_seed(5, 2, 3, "draw") == derive_seed(5, 2, 3, "draw")


class TestSelectOnce:
    def test_selection_comes_from_pool(self):
        features, labels = small_data()
        known = {s: int(labels[s]) for s in range(0, 160, 8)}
        pool = [s for s in range(160) if s not in known]
        for strategy in ("random", "minmargin", "varratio", "nds", "ndsplus"):
            picked = select_once(features, known, pool, strategy, 2, 6, seed=4)
            assert len(picked) == 6
            assert set(picked) <= set(pool)

    def test_deterministic(self):
        features, labels = small_data()
        known = {s: int(labels[s]) for s in range(0, 160, 8)}
        pool = [s for s in range(160) if s not in known]
        a = select_once(features, known, pool, "nds", 2, 5, seed=9)
        b = select_once(features, known, pool, "nds", 2, 5, seed=9)
        assert a == b


class TestRecordEmission:
    def test_records_deterministic_bytes(self, tmp_path):
        features, labels = small_data()
        result = run_experiment(small_config(), data=(features, labels))
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_records(p1, [result])
        write_records(p2, [result])
        assert p1.read_bytes() == p2.read_bytes()
        assert (tmp_path / "a.jsonl.timings.jsonl").exists()

    def test_record_fields_present(self, tmp_path):
        features, labels = small_data()
        result = run_experiment(small_config("ndsplus", repetitions=1), data=(features, labels))
        rows = records_json_rows([result])
        first = rows[0]
        for field in ("strategy", "repetition", "cycle", "labeled_count", "macro_f1",
                      "per_class_f1", "alpha", "cutoff_multipliers"):
            assert field in first
        assert first["alpha"] == 1.0
        assert rows[1]["alpha"] == pytest.approx(0.98)

    def test_summary_and_plot_files(self, tmp_path):
        features, labels = small_data()
        results = [
            run_experiment(small_config("random"), data=(features, labels)),
            run_experiment(small_config("minmargin"), data=(features, labels)),
        ]
        write_summary(tmp_path / "summary.tsv", results)
        write_plot_data(tmp_path / "plot.tsv", results)
        summary = (tmp_path / "summary.tsv").read_text().splitlines()
        assert summary[0] == "strategy\tlabeled_count\tmean_f1\tstd_f1\trepetitions"
        plot = (tmp_path / "plot.tsv").read_text().splitlines()
        assert plot[0] == "labeled_count\trandom\tminmargin"
        assert len(plot) == 6
