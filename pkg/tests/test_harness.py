import json
import math

import numpy as np
import pytest

from cashlab.configspace import Configuration, model_probabilities, parse_space
from cashlab.harness import (
    HarnessError,
    MethodSpec,
    ResultsStore,
    Suite,
    bracket_win_counts,
    count_entropy,
    export_loss_matrix,
    generate_problem,
    run_method,
    run_suite,
    synthetic_evaluate,
)
from cashlab.stats import StatsError

SPACE = parse_space(
    """
format: 1
models:
  - name: tiny
    hyperparameters:
      - {name: x, kind: continuous, lower: 0.0, upper: 1.0}
  - name: middle
    hyperparameters:
      - {name: a, kind: continuous, lower: -2.0, upper: 2.0}
      - {name: k, kind: integer, lower: 1, upper: 16}
      - {name: c, kind: categorical, categories: [u, v, w]}
  - name: logspace
    hyperparameters:
      - {name: lr, kind: continuous, lower: 0.001, upper: 1.0, scale: log}
      - {name: reg, kind: continuous, lower: 0.01, upper: 10.0, scale: log}
"""
)


def tiny_suite(n_problems=2, reps=2, noise=0.05):
    problems = [
        generate_problem(SPACE, landscape_seed=100 + i, noise_scale=noise, problem_id=f"p{i}")
        for i in range(n_problems)
    ]
    return Suite(problems=problems, reps=reps, inner_splits=4)


METHODS = [
    MethodSpec(name="RS", algorithm="rs", sampling="uniform", budget=6),
    MethodSpec(name="SH.W", algorithm="sh", sampling="weighted", budget=6, eta=3.0, rmin=1 / 3),
    MethodSpec(name="HB", algorithm="hyperband", sampling="uniform", budget=8, eta=3.0, rmin=1 / 3),
]


class TestGenerateProblem:
    def test_deterministic(self):
        a = generate_problem(SPACE, landscape_seed=7, noise_scale=0.1)
        b = generate_problem(SPACE, landscape_seed=7, noise_scale=0.1)
        assert a.optimum == b.optimum
        assert a.optimum_loss == b.optimum_loss
        rng = np.random.default_rng(0)
        dist = model_probabilities(SPACE, "uniform")
        from cashlab.configspace import sample_configuration

        for _ in range(50):
            config = sample_configuration(SPACE, dist, rng)
            assert a.true_loss(config) == b.true_loss(config)

    def test_noise_free_evaluator_returns_truth_at_any_resource(self):
        problem = generate_problem(SPACE, landscape_seed=8, noise_scale=0.0)
        rng = np.random.default_rng(1)
        dist = model_probabilities(SPACE, "uniform")
        from cashlab.configspace import sample_configuration

        for _ in range(20):
            config = sample_configuration(SPACE, dist, rng)
            truth = problem.true_loss(config)
            for r in (0.1, 0.5, 1.0):
                assert problem.evaluate(config, r, trial_seed=5) == truth

    def test_random_probes_never_beat_recorded_optimum(self):
        problem = generate_problem(SPACE, landscape_seed=9, noise_scale=0.0)
        rng = np.random.default_rng(2)
        dist = model_probabilities(SPACE, "uniform")
        from cashlab.configspace import sample_configuration

        for _ in range(10**4):
            config = sample_configuration(SPACE, dist, rng)
            assert problem.true_loss(config) >= problem.optimum_loss

    def test_optimum_is_valid_configuration(self):
        problem = generate_problem(SPACE, landscape_seed=10, noise_scale=0.0)
        SPACE.validate_configuration(problem.optimum)

    def test_invalid_noise(self):
        with pytest.raises(HarnessError, match="noise"):
            generate_problem(SPACE, landscape_seed=1, noise_scale=-0.5)


class TestSyntheticEvaluate:
    def test_full_resource_is_exact(self):
        problem = generate_problem(SPACE, landscape_seed=11, noise_scale=5.0)
        config = problem.optimum
        assert synthetic_evaluate(problem, config, 1.0, trial_seed=3) == problem.optimum_loss

    def test_purity(self):
        problem = generate_problem(SPACE, landscape_seed=12, noise_scale=0.3)
        config = problem.optimum
        a = synthetic_evaluate(problem, config, 0.25, trial_seed=9, inner_splits=6)
        b = synthetic_evaluate(problem, config, 0.25, trial_seed=9, inner_splits=6)
        assert a == b

    def test_noise_scale_law_at_half_resource(self):
        # sqrt((1-0.5)/0.5) = 1, so stddev over trial seeds must be close
        # to noise_scale / sqrt(inner_splits).
        noise, inner = 0.4, 5
        problem = generate_problem(SPACE, landscape_seed=13, noise_scale=noise)
        config = problem.optimum
        truth = problem.optimum_loss
        draws = np.array(
            [
                synthetic_evaluate(problem, config, 0.5, trial_seed=s, inner_splits=inner)
                for s in range(10**4)
            ]
        )
        sd = draws.std()
        assert sd == pytest.approx(noise / math.sqrt(inner), rel=0.05)
        assert draws.mean() == pytest.approx(truth, abs=5 * sd / 100)

    def test_noise_depends_on_seed_and_config(self):
        problem = generate_problem(SPACE, landscape_seed=14, noise_scale=0.3)
        a = synthetic_evaluate(problem, problem.optimum, 0.5, trial_seed=1)
        b = synthetic_evaluate(problem, problem.optimum, 0.5, trial_seed=2)
        assert a != b

    def test_resource_out_of_range(self):
        problem = generate_problem(SPACE, landscape_seed=15, noise_scale=0.1)
        with pytest.raises(HarnessError, match="resource"):
            synthetic_evaluate(problem, problem.optimum, 0.0, trial_seed=1)
        with pytest.raises(HarnessError, match="resource"):
            synthetic_evaluate(problem, problem.optimum, 1.5, trial_seed=1)


class TestRunSuite:
    def test_single_cell_grid(self):
        suite = tiny_suite(n_problems=1, reps=1)
        store = run_suite(suite, [METHODS[0]], seed=3)
        assert len(store.records) == 1
        store.check_complete()

    def test_full_grid_complete(self):
        suite = tiny_suite()
        store = run_suite(suite, METHODS, seed=4)
        assert len(store.records) == 2 * 2 * 3
        store.check_complete()

    def test_byte_identical_across_worker_limits(self):
        suite = tiny_suite()
        a = run_suite(suite, METHODS, worker_limit=1, seed=5)
        b = run_suite(suite, METHODS, worker_limit=8, seed=5)
        assert a.to_bytes() == b.to_bytes()

    def test_save_load_round_trip(self, tmp_path):
        suite = tiny_suite()
        store = run_suite(suite, METHODS, seed=6)
        path = tmp_path / "results.jsonl"
        store.save(path)
        again = ResultsStore.load(path)
        assert again.to_bytes() == store.to_bytes()

    def test_noise_free_validation_equals_generalization(self):
        suite = tiny_suite(noise=0.0)
        store = run_suite(suite, METHODS, seed=7)
        for record in store.records:
            assert record.validation_loss == record.generalization_loss

    def test_budget_bookkeeping(self):
        suite = tiny_suite()
        store = run_suite(suite, METHODS, seed=8)
        by_method = {m.name: m for m in METHODS}
        for record in store.records:
            method = by_method[record.method]
            if method.algorithm == "rs":
                assert record.budget_spent == method.budget
            elif method.algorithm == "sh":
                assert abs(record.budget_spent - method.budget) <= 1.0
            else:
                assert abs(record.budget_spent - method.budget) <= 2.0

    def test_duplicate_method_names_rejected(self):
        suite = tiny_suite(n_problems=1, reps=1)
        with pytest.raises(HarnessError, match="unique"):
            run_suite(suite, [METHODS[0], METHODS[0]], seed=9)

    def test_common_random_numbers_across_methods(self):
        # Methods with the same algorithm/sampling/budget see identical
        # runs within a (problem, rep) cell.
        suite = tiny_suite(n_problems=1, reps=1)
        twin = MethodSpec(name="RS2", algorithm="rs", sampling="uniform", budget=6)
        store = run_suite(suite, [METHODS[0], twin], seed=10)
        a, b = store.records
        assert a.validation_loss == b.validation_loss
        assert a.winner_values == b.winner_values


class TestExports:
    def test_loss_matrix_shape_and_order(self):
        suite = tiny_suite()
        store = run_suite(suite, METHODS, seed=11)
        matrix = export_loss_matrix(store, "validation")
        assert matrix.dataset_ids == ["p0", "p1"]
        assert matrix.method_names == ["RS", "SH.W", "HB"]
        assert matrix.losses.shape == (2, 3)

    def test_validation_and_generalization_same_shape(self):
        suite = tiny_suite()
        store = run_suite(suite, METHODS, seed=12)
        val = export_loss_matrix(store, "validation")
        gen = export_loss_matrix(store, "generalization")
        assert val.losses.shape == gen.losses.shape
        assert val.dataset_ids == gen.dataset_ids

    def test_single_method_rejected(self):
        suite = tiny_suite()
        store = run_suite(suite, [METHODS[0]], seed=13)
        with pytest.raises(StatsError, match="k >= 2"):
            export_loss_matrix(store, "validation")

    def test_rep_averaging(self):
        suite = tiny_suite(n_problems=2, reps=3)
        store = run_suite(suite, METHODS[:2], seed=14)
        matrix = export_loss_matrix(store, "validation")
        per_rep = [
            r.validation_loss
            for r in store.records
            if r.method == "RS" and r.problem_id == "p0"
        ]
        assert len(per_rep) == 3
        assert matrix.losses[0, 0] == pytest.approx(np.mean(per_rep), rel=1e-12)

    def test_incomplete_grid_rejected(self):
        suite = tiny_suite()
        store = run_suite(suite, METHODS, seed=15)
        store.records.pop()
        with pytest.raises(HarnessError, match="incomplete"):
            export_loss_matrix(store, "validation")

    def test_unknown_split_rejected(self):
        suite = tiny_suite(n_problems=1, reps=1)
        store = run_suite(suite, METHODS, seed=16)
        with pytest.raises(HarnessError, match="split"):
            export_loss_matrix(store, "test")


class TestBracketWins:
    def test_counts_partition(self):
        suite = tiny_suite(n_problems=2, reps=3)
        hb_u = MethodSpec(name="HB", algorithm="hyperband", sampling="uniform", budget=9, eta=3.0, rmin=1 / 9)
        hb_w = MethodSpec(name="HB.W", algorithm="hyperband", sampling="weighted", budget=9, eta=3.0, rmin=1 / 9)
        store = run_suite(suite, [hb_u, hb_w], seed=17)
        wins = bracket_win_counts(store)
        assert set(wins.counts) == {"uniform", "weighted"}
        for scheme in ("uniform", "weighted"):
            assert wins.counts[scheme].sum() == 2 * 3
            assert np.all(wins.counts[scheme] >= 0)

    def test_single_run_single_count(self):
        suite = tiny_suite(n_problems=1, reps=1)
        hb = MethodSpec(name="HB", algorithm="hyperband", sampling="uniform", budget=9, eta=3.0, rmin=1 / 9)
        store = run_suite(suite, [hb, METHODS[0]], seed=18)
        wins = bracket_win_counts(store)
        assert wins.counts["uniform"].sum() == 1

    def test_no_hyperband_rejected(self):
        suite = tiny_suite(n_problems=1, reps=1)
        store = run_suite(suite, METHODS[:2], seed=19)
        with pytest.raises(HarnessError, match="hyperband"):
            bracket_win_counts(store)

    def test_entropy(self):
        assert count_entropy(np.array([5, 0, 0])) == 0.0
        assert count_entropy(np.array([1, 1, 1, 1])) == pytest.approx(math.log(4))
        assert count_entropy(np.array([3, 1])) < count_entropy(np.array([2, 2]))


class TestRunMethod:
    def test_sh_budget_33_explorative(self):
        problem = generate_problem(SPACE, landscape_seed=20, noise_scale=0.05)
        method = MethodSpec(name="SH2", algorithm="sh", sampling="uniform", budget=33, eta=3.0, rmin=1 / 9)
        dist = model_probabilities(SPACE, "uniform")
        result = run_method(SPACE, dist, method, problem.evaluator(4), seed=21)
        rung0 = [t for t in result.trials if t.rung == 0]
        assert len(rung0) == 99
        assert result.budget_spent == pytest.approx(33.0, abs=1e-9)

    def test_hyperband_budget_split(self):
        problem = generate_problem(SPACE, landscape_seed=22, noise_scale=0.05)
        method = MethodSpec(name="HB", algorithm="hyperband", sampling="uniform", budget=99, eta=3.0, rmin=1 / 9)
        dist = model_probabilities(SPACE, "uniform")
        result = run_method(SPACE, dist, method, problem.evaluator(4), seed=23)
        assert abs(result.budget_spent - 99.0) <= 3.0
        assert result.bracket_of_winner in (0, 1, 2)


class TestStoreFormat:
    def test_manifest_first_line(self):
        suite = tiny_suite(n_problems=1, reps=1)
        store = run_suite(suite, METHODS, seed=24)
        lines = store.to_lines()
        manifest = json.loads(lines[0])
        assert manifest["record"] == "manifest"
        assert manifest["seed"] == 24
        assert [m["name"] for m in manifest["methods"]] == ["RS", "SH.W", "HB"]
        run = json.loads(lines[1])
        assert run["record"] == "run"
        assert set(run) >= {
            "problem_id", "rep", "method", "validation_loss",
            "generalization_loss", "budget_spent", "bracket_of_winner",
        }

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"record": "mystery"}\n')
        with pytest.raises(HarnessError, match="mystery"):
            ResultsStore.load(path)
