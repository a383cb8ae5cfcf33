"""Change analysis, training-set assembly, Markov projection, allocation,
variable influence, and three-map validation."""

import numpy as np
import pytest

from coastrise.drivers import DriverStack
from coastrise.errors import InsufficientSamples, NoTransitionsError
from coastrise.grid import GridHeader
from coastrise.landchange import (
    MarkovMatrix,
    TransitionSpec,
    allocate,
    build_training_set,
    change_analysis,
    filter_transitions,
    markov_from_crosstab,
    project_markov,
    require_transitions,
    validate_three_map,
    variable_influence,
)
from coastrise.mlp import MlpHyperparams, train_mlp

from conftest import lulc_legend, make_class_grid, make_float_grid


class TestChangeAnalysis:
    def test_no_change_means_no_transitions(self):
        cells = np.array([[1, 2], [3, 4]], dtype=np.uint8)
        g = make_class_grid(cells, lulc_legend())
        ca = change_analysis(g, g)
        assert all(v == 0 for v in ca.gains.values())
        assert all(v == 0 for v in ca.losses.values())
        assert ca.transitions == []

    def test_single_cell_transition(self):
        t1 = make_class_grid(np.array([[1, 1]], dtype=np.uint8), lulc_legend())
        t2 = make_class_grid(np.array([[1, 2]], dtype=np.uint8), lulc_legend())
        ca = change_analysis(t1, t2)
        assert ca.gains[2] == 1 and ca.losses[1] == 1
        assert ca.transitions == [TransitionSpec(1, 2, 1)]

    def test_random_pair_matches_marginal_oracle(self):
        rng = np.random.default_rng(211)
        a = rng.integers(1, 5, (20, 20)).astype(np.uint8)
        b = rng.integers(1, 5, (20, 20)).astype(np.uint8)
        ca = change_analysis(make_class_grid(a, lulc_legend()), make_class_grid(b, lulc_legend()))
        for c in range(1, 5):
            assert ca.gains[c] == int(np.count_nonzero((a != c) & (b == c)))
            assert ca.losses[c] == int(np.count_nonzero((a == c) & (b != c)))
        for spec in ca.transitions:
            want = int(np.count_nonzero((a == spec.from_class) & (b == spec.to_class)))
            assert spec.cell_count == want


class TestFilterTransitions:
    def specs(self):
        return [TransitionSpec(3, 4, 9000), TransitionSpec(1, 2, 4999), TransitionSpec(2, 4, 120)]

    def test_threshold_keeps_large_transitions(self):
        kept = filter_transitions(self.specs(), 5000)
        assert [(s.from_class, s.to_class) for s in kept] == [(3, 4)]
        assert kept[0].included

    def test_zero_threshold_keeps_all(self):
        assert len(filter_transitions(self.specs(), 0)) == 3

    def test_above_max_empties_and_downstream_raises(self):
        kept = filter_transitions(self.specs(), 10**6)
        assert kept == []
        with pytest.raises(NoTransitionsError):
            require_transitions(kept)


def make_driver_stack(header, arrays):
    grids = tuple(make_float_grid(a, cell=header.cell_size, crs=header.crs_tag) for a in arrays)
    names = ("elevation", "dist_rivers", "dist_disturbance", "dist_roads", "dist_urban", "slope")
    return DriverStack(names, grids)


def transition_setup(rng, size=64, p_convert=None):
    """t1 all-grassland grid where conversion probability tracks driver 4."""
    drv = [rng.uniform(0, 100, (size, size)) for _ in range(6)]
    stack = make_driver_stack(GridHeader(size, size, 1.0, 0, 0, "test"), drv)
    t1 = make_class_grid(np.full((size, size), 3, dtype=np.uint8), lulc_legend())
    if p_convert is None:
        p_convert = 1.0 / (1.0 + np.exp((drv[3] - 50.0) / 8.0))  # near roads converts
    converted = rng.random((size, size)) < p_convert
    t2_cells = np.where(converted, 4, 3).astype(np.uint8)
    t2 = make_class_grid(t2_cells, lulc_legend())
    return t1, t2, stack


class TestBuildTrainingSet:
    def test_balanced_split_sizes(self):
        rng = np.random.default_rng(223)
        t1, t2, stack = transition_setup(rng, size=90)
        spec = TransitionSpec(3, 4, 0, included=True)
        ts = build_training_set(t1, t2, stack, spec, samples_per_class=2000, seed=1)
        assert ts.x_train.shape == (2000, 6)
        assert ts.x_test.shape == (2000, 6)
        assert ts.y_train.sum(axis=0).tolist() == [1000.0, 1000.0]
        assert ts.y_test.sum(axis=0).tolist() == [1000.0, 1000.0]

    def test_sampled_cells_belong_to_their_groups(self):
        rng = np.random.default_rng(227)
        t1, t2, stack = transition_setup(rng, size=80)
        spec = TransitionSpec(3, 4, 0, included=True)
        ts = build_training_set(t1, t2, stack, spec, samples_per_class=500, seed=2)
        for cells, y in ((ts.train_cells, ts.y_train), (ts.test_cells, ts.y_test)):
            for (r, c), target in zip(cells, y):
                assert t1.cells[r, c] == 3
                if target[0] == 1.0:  # transition sample
                    assert t2.cells[r, c] == 4
                else:
                    assert t2.cells[r, c] == 3

    def test_train_and_test_cells_are_disjoint(self):
        rng = np.random.default_rng(229)
        t1, t2, stack = transition_setup(rng, size=80)
        spec = TransitionSpec(3, 4, 0, included=True)
        ts = build_training_set(t1, t2, stack, spec, samples_per_class=500, seed=3)
        train = {tuple(rc) for rc in ts.train_cells.tolist()}
        test = {tuple(rc) for rc in ts.test_cells.tolist()}
        assert not train & test

    def test_features_normalized_to_unit_range(self):
        rng = np.random.default_rng(233)
        t1, t2, stack = transition_setup(rng, size=80)
        spec = TransitionSpec(3, 4, 0, included=True)
        ts = build_training_set(t1, t2, stack, spec, samples_per_class=800, seed=4)
        both = np.vstack([ts.x_train, ts.x_test])
        assert both.min() >= 0.0 and both.max() <= 1.0
        assert both.min(axis=0).max() == 0.0  # every variable attains 0
        assert both.max(axis=0).min() == 1.0  # and 1

    def test_seeded_sampling_is_deterministic(self):
        rng = np.random.default_rng(239)
        t1, t2, stack = transition_setup(rng, size=64)
        spec = TransitionSpec(3, 4, 0, included=True)
        a = build_training_set(t1, t2, stack, spec, samples_per_class=300, seed=9)
        b = build_training_set(t1, t2, stack, spec, samples_per_class=300, seed=9)
        assert np.array_equal(a.x_train, b.x_train)
        assert np.array_equal(a.test_cells, b.test_cells)

    def test_insufficient_cells_rejected(self):
        rng = np.random.default_rng(241)
        t1, t2, stack = transition_setup(rng, size=16)
        spec = TransitionSpec(3, 4, 0, included=True)
        with pytest.raises(InsufficientSamples):
            build_training_set(t1, t2, stack, spec, samples_per_class=100000, seed=1)


class TestVariableInfluence:
    def trained(self, rng, informative=3):
        """Labels depend only on driver column ``informative``."""
        n = 600
        x = rng.uniform(0, 1, (2 * n, 6))
        labels = (x[:, informative] > 0.5).astype(int)
        y = np.zeros((2 * n, 2))
        y[np.arange(2 * n), labels] = 1.0
        from coastrise.mlp import TrainingSet

        ts = TrainingSet(
            x_train=x[:n],
            y_train=y[:n],
            x_test=x[n:],
            y_test=y[n:],
            norm_min=np.zeros(6),
            norm_max=np.ones(6),
            variable_names=tuple(f"v{i}" for i in range(6)),
        )
        model = train_mlp(ts, MlpHyperparams(max_iter=600, lr_start=0.8, lr_end=0.1), seed=2)
        return model, ts

    def test_perfect_predictor_forced_constant_drops_to_chance(self):
        rng = np.random.default_rng(251)
        model, ts = self.trained(rng, informative=3)
        assert model.accuracy > 0.95
        report = variable_influence(model, ts)
        forced = {r.label: r for r in report.forced_constant}
        assert forced["v3_constant"].accuracy < 0.6  # near chance
        assert forced["v3_constant"].influence_order == 1  # most influential

    def test_uninformative_variable_barely_matters(self):
        rng = np.random.default_rng(257)
        model, ts = self.trained(rng, informative=3)
        report = variable_influence(model, ts)
        forced = {r.label: r for r in report.forced_constant}
        base = forced["all_variables"].accuracy
        assert abs(forced["v0_constant"].accuracy - base) < 0.05

    def test_all_but_one_keeps_only_the_informative_variable_strong(self):
        rng = np.random.default_rng(263)
        model, ts = self.trained(rng, informative=3)
        report = variable_influence(model, ts)
        only = {r.label: r for r in report.all_but_one}
        assert only["only_v3"].accuracy > 0.9
        assert only["only_v0"].accuracy < 0.65


class TestMarkov:
    def test_identity_when_nothing_changes(self):
        cells = np.array([[1, 2], [3, 1]], dtype=np.uint8)
        g = make_class_grid(cells, lulc_legend())
        mm = markov_from_crosstab(g, g, 1991, 2006)
        # legend classes with zero cells keep identity rows
        assert mm.classes == (1, 2, 3, 4, 5)
        assert np.array_equal(mm.probabilities, np.eye(5))
        assert mm.base_years == 15.0

    def test_quarter_transition_row(self):
        t1 = make_class_grid(np.full((1, 8), 1, dtype=np.uint8), lulc_legend())
        t2_cells = np.array([[1, 1, 1, 1, 1, 1, 2, 2]], dtype=np.uint8)
        t2 = make_class_grid(t2_cells, lulc_legend())
        mm = markov_from_crosstab(t1, t2, 2000, 2010)
        i = mm.classes.index(1)
        assert mm.probabilities[i, mm.classes.index(1)] == pytest.approx(0.75)
        assert mm.probabilities[i, mm.classes.index(2)] == pytest.approx(0.25)

    def test_rows_sum_to_one_on_random_pairs(self):
        rng = np.random.default_rng(269)
        for _ in range(50):
            a = rng.integers(1, 6, (16, 16)).astype(np.uint8)
            b = rng.integers(1, 6, (16, 16)).astype(np.uint8)
            mm = markov_from_crosstab(
                make_class_grid(a, lulc_legend()), make_class_grid(b, lulc_legend()), 0, 1
            )
            assert np.abs(mm.probabilities.sum(axis=1) - 1.0).max() < 1e-12

    def test_absent_class_keeps_identity_row(self):
        t1 = make_class_grid(np.array([[1, 1]], dtype=np.uint8), lulc_legend())
        t2 = make_class_grid(np.array([[1, 2]], dtype=np.uint8), lulc_legend())
        mm = markov_from_crosstab(t1, t2, 0, 1)
        j = mm.classes.index(2)
        row = mm.probabilities[j]
        assert row[j] == 1.0 and row.sum() == 1.0


class TestProjectMarkov:
    def sample_matrix(self):
        p = np.array([[0.7, 0.3], [0.1, 0.9]])
        return MarkovMatrix((1, 2), p, base_years=10.0)

    def test_single_step_uses_p_directly(self):
        mm = self.sample_matrix()
        tq = project_markov(mm, {1: 100, 2: 50}, target_year=2010, base_year=2000)
        assert tq.quota(1, 2) == pytest.approx(30.0)
        assert tq.quota(2, 1) == pytest.approx(5.0)

    def test_identity_matrix_means_no_change(self):
        mm = MarkovMatrix((1, 2), np.eye(2), base_years=5.0)
        tq = project_markov(mm, {1: 10, 2: 20}, 2100, 2000)
        assert tq.quota(1, 2) == 0.0
        assert tq.quota(2, 1) == 0.0

    def test_two_steps_equal_explicit_simulation(self):
        mm = self.sample_matrix()
        counts = {1: 80.0, 2: 40.0}
        tq = project_markov(mm, counts, target_year=2020, base_year=2000)
        p2 = mm.probabilities @ mm.probabilities
        vec = np.array([80.0, 40.0])
        expected = vec[:, None] * p2
        assert np.abs(tq.expected_cells - expected).max() < 1e-9

    def test_fractional_step_interpolates_powers(self):
        mm = self.sample_matrix()
        tq = project_markov(mm, {1: 10, 2: 10}, target_year=2005, base_year=2000)
        expected = 0.5 * np.eye(2) + 0.5 * mm.probabilities
        assert np.allclose(tq.effective_matrix, expected)
        assert np.abs(tq.effective_matrix.sum(axis=1) - 1.0).max() < 1e-9


class TestAllocate:
    def setup_case(self, size=6):
        base = make_class_grid(np.full((size, size), 3, dtype=np.uint8), lulc_legend())
        rng = np.random.default_rng(271)
        pot = make_float_grid(rng.uniform(0, 1, (size, size)))
        return base, pot

    def test_zero_quota_is_identity(self):
        base, pot = self.setup_case()
        result = allocate(base, {(3, 4): pot}, {(3, 4): 0.0})
        assert np.array_equal(result.predicted.cells, base.cells)

    def test_full_quota_converts_everything(self):
        base, pot = self.setup_case()
        result = allocate(base, {(3, 4): pot}, {(3, 4): 36.0})
        assert (result.predicted.cells == 4).all()

    def test_top_ranked_cells_convert(self):
        base, pot = self.setup_case()
        result = allocate(base, {(3, 4): pot}, {(3, 4): 5.0})
        flat = pot.cells.ravel()
        top5 = set(np.argsort(-flat, kind="stable")[:5].tolist())
        converted = set(np.nonzero((result.predicted.cells == 4).ravel())[0].tolist())
        assert converted == top5
        assert result.applied[(3, 4)] == 5

    def test_ties_break_row_major(self):
        base = make_class_grid(np.full((2, 3), 3, dtype=np.uint8), lulc_legend())
        pot = make_float_grid(np.full((2, 3), 0.5))
        result = allocate(base, {(3, 4): pot}, {(3, 4): 2.0})
        assert result.predicted.cells[0].tolist() == [4, 4, 3]

    def test_quota_clamped_with_shortfall(self):
        base, pot = self.setup_case(size=3)
        quota = 50.0  # only 9 eligible
        result = allocate(base, {(3, 4): pot}, {(3, 4): quota})
        assert result.applied[(3, 4)] == 9
        assert result.shortfalls[(3, 4)] == 41

    def test_conserves_cell_counts(self):
        base, pot = self.setup_case(size=10)
        result = allocate(base, {(3, 4): pot}, {(3, 4): 23.0})
        counts = result.predicted.class_counts()
        assert counts[4] == 23
        assert counts[3] == 100 - 23

    def test_unlisted_transitions_not_applied(self):
        base, pot = self.setup_case()
        result = allocate(base, {(3, 4): pot}, {(3, 4): 4.0, (3, 5): 10.0})
        assert (result.predicted.cells != 5).all()


class TestValidateThreeMap:
    def grids(self, t2, pred, t3):
        return (
            make_class_grid(np.asarray(t2, dtype=np.uint8), lulc_legend()),
            make_class_grid(np.asarray(pred, dtype=np.uint8), lulc_legend()),
            make_class_grid(np.asarray(t3, dtype=np.uint8), lulc_legend()),
        )

    def test_everything_static_is_correct_rejection(self):
        g = [[1, 2], [3, 4]]
        t2, pred, t3 = self.grids(g, g, g)
        vm = validate_three_map(t2, pred, t3)
        assert vm.correct_rejections == 4
        assert vm.hits == vm.misses == vm.false_alarms == 0

    def test_unpredicted_change_is_a_miss(self):
        t2, pred, t3 = self.grids([[1, 1]], [[1, 1]], [[1, 2]])
        vm = validate_three_map(t2, pred, t3)
        assert vm.misses == 1 and vm.hits == 0 and vm.false_alarms == 0

    def test_predicted_change_that_happened_is_a_hit(self):
        t2, pred, t3 = self.grids([[1]], [[2]], [[2]])
        assert validate_three_map(t2, pred, t3).hits == 1

    def test_predicted_change_that_did_not_happen_is_a_false_alarm(self):
        t2, pred, t3 = self.grids([[1]], [[2]], [[1]])
        assert validate_three_map(t2, pred, t3).false_alarms == 1

    def test_random_triples_match_triple_loop_oracle(self):
        rng = np.random.default_rng(277)
        for _ in range(20):
            a = rng.integers(1, 4, (12, 12)).astype(np.uint8)
            b = rng.integers(1, 4, (12, 12)).astype(np.uint8)
            c = rng.integers(1, 4, (12, 12)).astype(np.uint8)
            t2, pred, t3 = self.grids(a, b, c)
            vm = validate_three_map(t2, pred, t3)
            hits = misses = false_alarms = correct = 0
            for r in range(12):
                for col in range(12):
                    observed = a[r, col] != c[r, col]
                    predicted = a[r, col] != b[r, col]
                    if observed and predicted:
                        hits += 1
                    elif observed:
                        misses += 1
                    elif predicted:
                        false_alarms += 1
                    else:
                        correct += 1
            assert (vm.hits, vm.misses, vm.false_alarms, vm.correct_rejections) == (
                hits,
                misses,
                false_alarms,
                correct,
            )
            assert vm.total == 144
