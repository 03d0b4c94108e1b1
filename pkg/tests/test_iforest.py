import json

import numpy as np
import pytest

from rbfmean.errors import ConfigError, DataError, InsufficientDataError, ModelLoadError, ShapeError
from rbfmean.iforest import (
    ForestConfig,
    IsolationForest,
    anomaly_score,
    c_factor,
    fit_forest,
    forest_from_dict,
    forest_to_dict,
    path_length,
    score_batch,
)

from oracles import (
    assert_tree_matches,
    harmonic_sum,
    oracle_anomaly_score,
    oracle_build_tree,
    oracle_c_factor,
    oracle_path_length,
)


class TestCFactor:
    def test_degenerate(self):
        assert c_factor(0) == 0.0
        assert c_factor(1) == 0.0

    def test_base_case(self):
        assert c_factor(2) == 1.0

    def test_against_harmonic_sum(self):
        # ln(m) + gamma approximates H(m) to ~1/(2m); check at n=256
        exact = 2.0 * harmonic_sum(255) - 2.0 * 255 / 256
        assert abs(c_factor(256) - exact) < 0.005

    def test_monotone_increasing(self):
        values = [c_factor(n) for n in range(2, 200)]
        assert all(a < b for a, b in zip(values, values[1:]))


class TestForestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            ForestConfig(n_trees=0)
        with pytest.raises(ConfigError):
            ForestConfig(subsample=1)
        with pytest.raises(ConfigError):
            ForestConfig(max_depth=0)
        with pytest.raises(ConfigError):
            ForestConfig(seed=-1)


class TestFitForest:
    def test_two_points_one_tree(self):
        forest = fit_forest(np.array([[0.0], [1.0]]), ForestConfig(n_trees=1, seed=3))
        tree = forest.trees[0]
        assert tree.n_nodes == 3
        assert tree.feature[0] == 0
        assert 0.0 < tree.threshold[0] <= 1.0
        assert tree.feature[1] == -1 and tree.feature[2] == -1
        assert int(tree.size[1]) == 1 and int(tree.size[2]) == 1

    def test_identical_vectors_single_leaf(self):
        x = np.tile([2.5, -1.0], (8, 1))
        forest = fit_forest(x, ForestConfig(n_trees=5, seed=0))
        for tree in forest.trees:
            assert tree.n_nodes == 1
            assert tree.feature[0] == -1
            assert int(tree.size[0]) == 8

    def test_deterministic_node_by_node(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(120, 2))
        a = fit_forest(x, ForestConfig(n_trees=10, seed=42))
        b = fit_forest(x, ForestConfig(n_trees=10, seed=42))
        for ta, tb in zip(a.trees, b.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)
            assert np.array_equal(ta.left, tb.left)
            assert np.array_equal(ta.right, tb.right)
            assert np.array_equal(ta.size, tb.size)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            fit_forest(np.array([[1.0, 2.0]]), ForestConfig())

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            fit_forest(np.array([[1.0], [np.nan]]), ForestConfig())

    def test_split_values_inside_subset_range(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(60, 3))
        forest = fit_forest(x, ForestConfig(n_trees=8, seed=7))
        lo, hi = x.min(axis=0), x.max(axis=0)
        for tree in forest.trees:
            for node in range(tree.n_nodes):
                f = tree.feature[node]
                if f >= 0:
                    assert lo[f] < tree.threshold[node] <= hi[f]

    def test_depth_capped(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(256, 1))
        forest = fit_forest(x, ForestConfig(n_trees=4, max_depth=3, seed=1))
        for tree in forest.trees:
            depths = np.zeros(tree.n_nodes, dtype=int)
            for node in range(tree.n_nodes):
                for child in (tree.left[node], tree.right[node]):
                    if child >= 0:
                        depths[child] = depths[node] + 1
            assert depths.max() <= 3


class TestOracleEquivalence:
    def test_construction_matches_recursive_oracle(self):
        for seed in range(8):
            rng = np.random.default_rng(1000 + seed)
            n = int(rng.integers(3, 17))
            x = rng.normal(size=(n, 2))
            config = ForestConfig(n_trees=1, seed=seed)
            forest = fit_forest(x, config)
            oracle_tree, psi = oracle_build_tree(x, config.subsample, max(1, int(np.ceil(np.log2(min(256, n))))), seed, 0)
            assert forest.psi == psi
            assert_tree_matches(forest.trees[0], oracle_tree)

    def test_path_length_matches_oracle_walk(self):
        for seed in range(6):
            rng = np.random.default_rng(2000 + seed)
            x = rng.normal(size=(16, 2))
            config = ForestConfig(n_trees=1, seed=seed)
            forest = fit_forest(x, config)
            oracle_tree, _ = oracle_build_tree(x, config.subsample, 4, seed, 0)
            for query in rng.normal(size=(20, 2)):
                assert path_length(forest.trees[0], query) == oracle_path_length(oracle_tree, query)

    def test_path_length_manual_cases(self):
        single_leaf = fit_forest(np.tile([1.0], (6, 1)), ForestConfig(n_trees=1, seed=0)).trees[0]
        assert path_length(single_leaf, np.array([0.0])) == c_factor(6)
        two_pt = fit_forest(np.array([[0.0], [1.0]]), ForestConfig(n_trees=1, seed=0)).trees[0]
        assert path_length(two_pt, np.array([-5.0])) == 1 + c_factor(1) == 1.0


class TestAnomalyScore:
    def test_half_at_normalizer(self):
        # constant training data -> single-leaf trees -> E[h] = c(psi) exactly
        x = np.tile([3.0, 3.0], (10, 1))
        forest = fit_forest(x, ForestConfig(n_trees=1, seed=0))
        assert anomaly_score(forest, np.array([3.0, 3.0])) == 0.5
        assert anomaly_score(forest, np.array([99.0, -99.0])) == 0.5

    def test_single_leaf_forest_scores_identical(self):
        x = np.tile([1.0], (12, 1))
        forest = fit_forest(x, ForestConfig(n_trees=7, seed=2))
        scores = score_batch(forest, np.array([[0.0], [1.0], [50.0]]))
        assert scores[0] == scores[1] == scores[2]

    def test_outlier_scores_above_medoid(self):
        rng = np.random.default_rng(3)
        blob = rng.normal(size=(100, 2))
        forest = fit_forest(blob, ForestConfig(n_trees=100, seed=5))
        medoid = blob[np.argmin(((blob - blob.mean(axis=0)) ** 2).sum(axis=1))]
        far = np.array([25.0, 25.0])
        assert anomaly_score(forest, far) >= anomaly_score(forest, medoid)

    def test_scores_in_open_unit_interval(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(200, 2))
        forest = fit_forest(x, ForestConfig(n_trees=50, seed=1))
        scores = score_batch(forest, rng.normal(size=(500, 2)) * 5)
        assert np.all(scores > 0.0) and np.all(scores < 1.0)

    def test_monotone_separation_20_seeds(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            blob = rng.normal(size=(100, 2))
            outlier = np.array([10.0, 10.0])  # 10 standard deviations out
            forest = fit_forest(blob, ForestConfig(n_trees=100, seed=seed))
            inlier_scores = score_batch(forest, blob)
            assert anomaly_score(forest, outlier) > np.percentile(inlier_scores, 95)

    def test_batch_matches_per_tree_walks(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(50, 2))
        forest = fit_forest(x, ForestConfig(n_trees=20, seed=9))
        queries = rng.normal(size=(15, 2))
        batch = score_batch(forest, queries)
        for i, q in enumerate(queries):
            hs = np.array([path_length(t, q) for t in forest.trees])
            expected = 2.0 ** (-np.mean(hs) / c_factor(forest.psi))
            # summation order differs between the strided batch reduction and
            # the 1-D mean, so agreement is to rounding, not bitwise
            assert batch[i] == pytest.approx(expected, rel=1e-12)

    def test_full_composition_matches_oracle(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(14, 2))
        config = ForestConfig(n_trees=5, seed=21)
        forest = fit_forest(x, config)
        oracle_trees = []
        for i in range(5):
            tree, psi = oracle_build_tree(x, config.subsample, 4, 21, i)
            oracle_trees.append(tree)
        for q in rng.normal(size=(10, 2)):
            ours = anomaly_score(forest, q)
            theirs = oracle_anomaly_score(oracle_trees, psi, q)
            assert ours == pytest.approx(theirs, rel=1e-12)

    def test_dimension_mismatch(self):
        forest = fit_forest(np.random.default_rng(0).normal(size=(10, 2)), ForestConfig(n_trees=2, seed=0))
        with pytest.raises(ShapeError):
            anomaly_score(forest, np.array([1.0]))
        with pytest.raises(ShapeError):
            score_batch(forest, np.zeros((3, 3)))


class TestPersistence:
    def test_round_trip_bit_identical_scores(self):
        rng = np.random.default_rng(17)
        x = rng.normal(size=(300, 2))
        forest = fit_forest(x, ForestConfig(n_trees=30, seed=4))
        payload = json.dumps(forest_to_dict(forest))
        restored = forest_from_dict(json.loads(payload))
        queries = rng.normal(size=(100, 2)) * 3
        assert np.array_equal(score_batch(forest, queries), score_batch(restored, queries))
        for ta, tb in zip(forest.trees, restored.trees):
            assert np.array_equal(ta.threshold, tb.threshold)
            assert np.array_equal(ta.feature, tb.feature)

    def test_malformed_payload(self):
        with pytest.raises(ModelLoadError):
            forest_from_dict({"psi": 4})

    def test_child_index_out_of_range(self):
        forest = fit_forest(np.array([[0.0], [1.0]]), ForestConfig(n_trees=1, seed=0))
        doc = forest_to_dict(forest)
        doc["trees"][0]["left"][0] = 99
        with pytest.raises(ModelLoadError):
            forest_from_dict(doc)
