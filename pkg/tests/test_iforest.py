import numpy as np
import pytest

from isoguard.errors import IsoguardError
from isoguard.iforest import (
    External,
    Internal,
    IsolationForest,
    build_itree,
    expected_path_length,
    fit_forest,
    forest_from_json,
    forest_to_json,
    harmonic_number,
    mean_path_lengths,
    path_length,
    predict,
    score,
    score_batch,
)

GAMMA = 0.5772156649


def exact_harmonic(i):
    return sum(1.0 / k for k in range(1, i + 1))


def exact_c(m):
    """Independent oracle: the same piecewise formula with the exact harmonic sum."""
    if m > 2:
        return 2.0 * exact_harmonic(m - 1) - 2.0 * (m - 1) / m
    return 1.0 if m == 2 else 0.0


class TestHarmonic:
    def test_h1_is_the_constant(self):
        assert harmonic_number(1) == pytest.approx(GAMMA, abs=1e-15)

    def test_h2(self):
        assert harmonic_number(2) == pytest.approx(1.2703628454599452, abs=1e-12)

    def test_h10(self):
        assert harmonic_number(10) == pytest.approx(2.8798007578940457, abs=1e-12)

    def test_rejects_zero(self):
        with pytest.raises(IsoguardError):
            harmonic_number(0)


class TestExpectedPathLength:
    def test_m2_is_one(self):
        assert expected_path_length(2) == 1.0

    def test_small_m_is_zero(self):
        assert expected_path_length(0) == 0.0
        assert expected_path_length(1) == 0.0

    def test_c256(self):
        # 2*(ln 255 + gamma) - 2*255/256, frozen from direct evaluation
        assert expected_path_length(256) == pytest.approx(10.244770920116851, abs=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(IsoguardError):
            expected_path_length(-1)

    def test_approximation_tracks_exact_harmonic_for_m_at_least_12(self):
        # the log estimate of H(i) is ~1/(2i) low; doubled, the gap drops
        # below 0.09 from m = 12 onward and shrinks monotonically
        worst = 0.0
        h = exact_harmonic(11)  # running exact harmonic sum H(m-1)
        for m in range(12, 10_001):
            c_exact = 2.0 * h - 2.0 * (m - 1) / m
            worst = max(worst, abs(expected_path_length(m) - c_exact))
            h += 1.0 / m
        assert worst < 0.09

    def test_approximation_gap_is_largest_at_smallest_m(self):
        gaps = [abs(expected_path_length(m) - exact_c(m)) for m in range(3, 50)]
        assert gaps == sorted(gaps, reverse=True)


class TestBuildItree:
    def test_single_row_is_external(self):
        rng = np.random.default_rng(0)
        node = build_itree(np.array([[1.0, 2.0]]), 0, 8, rng)
        assert node == External(size=1)

    def test_two_distinct_rows_forced_partition(self):
        rng = np.random.default_rng(0)
        node = build_itree(np.array([[0.0], [1.0]]), 0, 1, rng)
        assert isinstance(node, Internal)
        assert node.left == External(size=1)
        assert node.right == External(size=1)
        assert 0.0 < node.value <= 1.0

    def test_identical_rows_external_immediately(self):
        rng = np.random.default_rng(0)
        node = build_itree(np.full((7, 3), 4.2), 0, 8, rng)
        assert node == External(size=7)

    def test_empty_sample_rejected(self):
        with pytest.raises(IsoguardError):
            build_itree(np.empty((0, 2)), 0, 8, np.random.default_rng(0))

    def test_height_limit_respected(self):
        rng = np.random.default_rng(1)
        sample = rng.normal(size=(64, 2))
        node = build_itree(sample, 0, 3, rng)

        def depth(n):
            if isinstance(n, External):
                return 0
            return 1 + max(depth(n.left), depth(n.right))

        assert depth(node) <= 3

    def test_split_strictly_between_min_and_max(self):
        rng = np.random.default_rng(5)
        sample = rng.normal(size=(32, 3))

        def check(node, rows):
            if isinstance(node, External):
                return
            values = rows[:, node.feature]
            assert values.min() < node.value <= values.max()
            mask = values < node.value
            check(node.left, rows[mask])
            check(node.right, rows[~mask])

        check(build_itree(sample, 0, 5, rng), sample)


class TestFitForest:
    def test_shape_invariants(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(300, 4))
        forest = fit_forest(X, t=20, m=64, seed=9)
        assert forest.height_limit == 6
        for tree in forest.trees:
            sizes = []
            depths = []

            def walk(node, d):
                if isinstance(node, External):
                    sizes.append(node.size)
                    depths.append(d)
                else:
                    walk(node.left, d + 1)
                    walk(node.right, d + 1)

            walk(tree, 0)
            assert sum(sizes) == 64
            assert max(depths) <= 6

    def test_determinism(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 3))
        a = forest_to_json(fit_forest(X, t=10, m=32, seed=7))
        b = forest_to_json(fit_forest(X, t=10, m=32, seed=7))
        assert a == b

    def test_seed_changes_forest(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 3))
        assert forest_to_json(fit_forest(X, t=5, m=32, seed=1)) != forest_to_json(
            fit_forest(X, t=5, m=32, seed=2)
        )

    def test_m_equal_n_uses_every_row(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(16, 2))
        forest = fit_forest(X, t=3, m=16, seed=0)
        for tree in forest.trees:
            total = 0

            def walk(node):
                nonlocal total
                if isinstance(node, External):
                    total += node.size
                else:
                    walk(node.left)
                    walk(node.right)

            walk(tree)
            assert total == 16

    def test_errors(self):
        X = np.zeros((10, 2))
        with pytest.raises(IsoguardError, match="exceeds"):
            fit_forest(X, t=5, m=11)
        with pytest.raises(IsoguardError, match="tree count"):
            fit_forest(X, t=0, m=4)
        with pytest.raises(IsoguardError, match=">= 2"):
            fit_forest(X, t=5, m=1)


class TestPathLength:
    def test_single_external_node(self):
        assert path_length(External(size=1), np.array([0.0])) == 0.0

    def test_depth_one(self):
        tree = Internal(feature=0, value=0.5, left=External(size=1), right=External(size=1))
        assert path_length(tree, np.array([0.2])) == 1.0
        assert path_length(tree, np.array([0.9])) == 1.0

    def test_external_size_adjustment(self):
        # external of size 2 at depth 3 contributes c(2) = 1
        leaf2 = External(size=2)
        d3 = Internal(0, 0.5, Internal(0, 0.25, Internal(0, 0.125, leaf2, External(1)), External(1)), External(1))
        assert path_length(d3, np.array([0.01])) == 4.0

    def test_batch_matches_single(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 3))
        forest = fit_forest(X, t=8, m=32, seed=11)
        batch = mean_path_lengths(forest, X)
        singles = np.array(
            [np.mean([path_length(tree, x) for tree in forest.trees]) for x in X]
        )
        np.testing.assert_allclose(batch, singles, rtol=0, atol=1e-12)


class TestScore:
    def constant_forest(self, m, t=10):
        # fitting identical rows gives t single-external-node trees of size m
        X = np.full((m, 2), 3.0)
        return fit_forest(X, t=t, m=m, seed=0)

    def test_mean_path_equal_to_c_scores_half(self):
        forest = self.constant_forest(m=32)
        s = score(forest, np.array([3.0, 3.0]))
        assert s.mean_path_length == pytest.approx(expected_path_length(32), abs=1e-12)
        assert s.s == pytest.approx(0.5, abs=1e-12)

    def test_zero_mean_path_scores_one(self):
        forest = IsolationForest(
            trees=[External(size=1)] * 4, t=4, m=2, height_limit=1, seed=0, n_features=1
        )
        s = score(forest, np.array([0.0]))
        assert s.mean_path_length == 0.0
        assert s.s == 1.0

    def test_scores_in_unit_interval(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(400, 3))
        forest = fit_forest(X, t=25, m=128, seed=5)
        s, _ = score_batch(forest, X)
        assert (s > 0.0).all() and (s <= 1.0).all()

    def test_monotone_decreasing_in_mean_path(self):
        forest = self.constant_forest(m=64)
        c = expected_path_length(64)
        values = [2.0 ** (-h / c) for h in (0.0, 1.0, 3.0, 8.0)]
        assert values == sorted(values, reverse=True)

    def test_identical_rows_score_equally(self):
        X = np.full((40, 2), 1.5)
        forest = fit_forest(X, t=10, m=40, seed=3)
        s, _ = score_batch(forest, X)
        assert np.unique(s).size == 1

    def test_dimension_mismatch(self):
        forest = self.constant_forest(m=8)
        with pytest.raises(IsoguardError, match="mismatch"):
            score_batch(forest, np.zeros((3, 5)))


class TestPredict:
    def test_boundary_score_is_outlier(self):
        X = np.full((16, 2), 3.0)
        forest = fit_forest(X, t=5, m=16, seed=0)  # every score is exactly 0.5
        verdicts = predict(forest, X, threshold=0.5)
        assert all(v.label == -1 for v in verdicts)
        assert all(v.score.s == pytest.approx(0.5, abs=1e-12) for v in verdicts)

    def test_threshold_above_everything_keeps_all(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(100, 2))
        forest = fit_forest(X, t=20, m=64, seed=1)
        verdicts = predict(forest, X, threshold=1.0)
        assert all(v.label == 1 for v in verdicts)

    def test_contamination_counts(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(100, 2))
        forest = fit_forest(X, t=20, m=64, seed=2)
        verdicts = predict(forest, X, contamination=0.1)
        assert sum(1 for v in verdicts if v.label == -1) == 10

    def test_contamination_tie_break_ascending_index(self):
        X = np.full((10, 1), 2.0)  # all scores identical
        forest = fit_forest(X, t=5, m=10, seed=0)
        verdicts = predict(forest, X, contamination=0.3)
        flagged = [i for i, v in enumerate(verdicts) if v.label == -1]
        assert flagged == [0, 1, 2]

    def test_contamination_range(self):
        forest = fit_forest(np.random.default_rng(0).normal(size=(20, 2)), t=3, m=8, seed=0)
        for bad in (0.0, 0.6, -0.1):
            with pytest.raises(IsoguardError, match="contamination"):
                predict(forest, np.zeros((4, 2)), contamination=bad)

    def test_both_modes_rejected(self):
        forest = fit_forest(np.random.default_rng(0).normal(size=(20, 2)), t=3, m=8, seed=0)
        with pytest.raises(IsoguardError, match="not both"):
            predict(forest, np.zeros((4, 2)), threshold=0.5, contamination=0.1)

    def test_far_point_gets_max_score(self):
        rng = np.random.default_rng(12)
        X = np.vstack([rng.normal(size=(500, 2)), [[10.0, 10.0]]])
        forest = fit_forest(X, t=50, m=128, seed=4)
        s, _ = score_batch(forest, X)
        assert int(np.argmax(s)) == 500


class TestPersistence:
    def test_round_trip_scores_bit_for_bit(self, tmp_path):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(200, 4))
        forest = fit_forest(X, t=15, m=64, seed=21)
        text = forest_to_json(forest)
        reloaded = forest_from_json(text)
        s1, h1 = score_batch(forest, X)
        s2, h2 = score_batch(reloaded, X)
        np.testing.assert_array_equal(s1, s2)
        np.testing.assert_array_equal(h1, h2)
        assert forest_to_json(reloaded) == text
