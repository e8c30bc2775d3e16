"""
Tests for CORTEX node labeling, split search, fitting and serialization
"""

import numpy as np
import pytest

from core import cost_matrix as cm
from core.cortex_tree import (
    Internal,
    Leaf,
    TreeParams,
    best_split,
    dumps_tree,
    fit,
    label_node,
    loads_tree,
    node_cost,
    predict,
    predict_batch,
    soft_probabilities,
)
from core.errors import ConfigurationError, DataError

from conftest import numeric_dataset


def random_valid_matrix(rng, K):
    costs = rng.uniform(0.1, 20.0, size=(K, K))
    np.fill_diagonal(costs, 0.0)
    return cm.CostMatrix(costs)


def node_counts(node, K):
    if isinstance(node, Leaf):
        return np.asarray(node.counts)
    return node_counts(node.left, K) + node_counts(node.right, K)


def internal_nodes(node):
    if isinstance(node, Internal):
        yield node
        yield from internal_nodes(node.left)
        yield from internal_nodes(node.right)


# =============================================================================
# Node labeling
# =============================================================================

class TestNodeCost:

    def test_costs_of_both_labels(self, asymmetric_matrix):
        assert node_cost([3, 7], asymmetric_matrix, 0) == pytest.approx(7.0)
        assert node_cost([3, 7], asymmetric_matrix, 1) == pytest.approx(30.0)

    def test_zero_counts(self, asymmetric_matrix):
        assert node_cost([0, 0], asymmetric_matrix, 1) == 0.0

    def test_bad_class_index(self, asymmetric_matrix):
        with pytest.raises(DataError):
            node_cost([1, 1], asymmetric_matrix, 2)


class TestLabelNode:

    def test_costly_minority_wins(self, asymmetric_matrix):
        assert label_node([3, 7], asymmetric_matrix) == (0, pytest.approx(7.0))

    def test_unit_matrix_is_majority_vote(self):
        assert label_node([3, 7], cm.unit(2))[0] == 1

    def test_tie_goes_to_lowest_index(self):
        assert label_node([5, 5], cm.unit(2))[0] == 0

    def test_empty_node(self, asymmetric_matrix):
        with pytest.raises(DataError, match="empty node"):
            label_node([0, 0], asymmetric_matrix)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            K = int(rng.integers(2, 6))
            matrix = random_valid_matrix(rng, K)
            counts = rng.integers(0, 30, size=K)
            counts[rng.integers(K)] += 1
            factor = float(rng.uniform(1e-3, 100.0))
            assert label_node(counts, matrix)[0] == label_node(counts, matrix.scaled(factor))[0]

    def test_unit_reduction_fuzzed(self):
        rng = np.random.default_rng(23)
        for _ in range(300):
            K = int(rng.integers(2, 7))
            counts = rng.integers(0, 10, size=K)
            counts[rng.integers(K)] += 1
            assert label_node(counts, cm.unit(K))[0] == int(np.argmax(counts))


class TestSoftProbabilities:

    def test_asymmetric_example(self, asymmetric_matrix):
        p = soft_probabilities([3, 7], asymmetric_matrix)
        np.testing.assert_allclose(p, [30 / 37, 7 / 37])
        assert p[0] == pytest.approx(0.8108, abs=1e-4)

    def test_pure_node(self):
        p = soft_probabilities([5, 0], cm.CostMatrix([[0, 1], [5, 0]]))
        np.testing.assert_allclose(p, [1.0, 0.0])

    def test_symmetric_node(self):
        np.testing.assert_allclose(soft_probabilities([4, 4], cm.unit(2)), [0.5, 0.5])

    def test_zero_cost_node_is_uniform(self):
        zero_row = cm.CostMatrix([[0, 0, 0], [1, 0, 1], [1, 1, 0]])
        np.testing.assert_allclose(soft_probabilities([4, 0, 0], zero_row), [1 / 3] * 3)

    def test_argmax_matches_label_fuzzed(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            K = int(rng.integers(2, 11))
            matrix = random_valid_matrix(rng, K)
            counts = rng.integers(0, 20, size=K)
            counts[rng.integers(K)] += 1
            p = np.asarray(soft_probabilities(counts, matrix))
            assert int(np.argmax(p)) == label_node(counts, matrix)[0]
            assert p.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all((p >= 0.0) & (p <= 1.0))


# =============================================================================
# Split search
# =============================================================================

class TestBestSplit:

    def test_separable_feature(self):
        rule, gain = best_split([[1.0], [2.0], [3.0], [4.0]], [0, 0, 1, 1], cm.unit(2))
        assert (rule.feature, rule.threshold) == (0, 2.5)
        assert gain == pytest.approx(2.0)

    def test_pure_node(self):
        assert best_split([[1.0], [2.0], [3.0]], [1, 1, 1], cm.unit(2)) is None

    def test_constant_feature(self):
        assert best_split([[1.0]] * 4, [0, 1, 0, 1], cm.unit(2)) is None

    def test_lowest_feature_wins_ties(self):
        X = np.column_stack([[1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0, 40.0]])
        rule, _ = best_split(X, [0, 0, 1, 1], cm.unit(2))
        assert rule.feature == 0

    def test_min_samples_leaf(self):
        X = [[1.0], [2.0], [3.0], [4.0], [5.0], [6.0]]
        assert best_split(X, [0, 1, 1, 1, 1, 1], cm.unit(2)) is not None
        assert best_split(X, [0, 1, 1, 1, 1, 1], cm.unit(2), TreeParams(min_samples_leaf=2)) is None

    def test_threshold_cap(self):
        X = np.arange(100.0).reshape(-1, 1)
        y = (np.arange(100) >= 37).astype(int)
        rule, gain = best_split(X, y, cm.unit(2), TreeParams(max_thresholds=5))
        exact, exact_gain = best_split(X, y, cm.unit(2))
        assert exact.threshold == 36.5
        assert gain <= exact_gain


class TestTreeParams:

    @pytest.mark.parametrize("kwargs", [
        {"max_depth": -1},
        {"min_samples_leaf": 0},
        {"min_gain": -1.0},
        {"max_thresholds": 0},
    ])
    def test_rejected(self, kwargs):
        with pytest.raises(ConfigurationError):
            TreeParams(**kwargs)


# =============================================================================
# Fitting and prediction
# =============================================================================

class TestFit:

    def test_separable_depth_one(self, separable_1d):
        tree = fit(separable_1d, cm.unit(2))
        assert tree.depth == 1 and tree.n_leaves == 2
        assert tree.root.split.threshold == 2.5
        labels, _ = predict_batch(tree, separable_1d.features)
        np.testing.assert_array_equal(labels, separable_1d.labels)

    def test_max_depth_zero(self, asymmetric_matrix):
        data = numeric_dataset(np.arange(10.0), [0] * 3 + [1] * 7)
        tree = fit(data, asymmetric_matrix, TreeParams(max_depth=0))
        assert isinstance(tree.root, Leaf)
        assert tree.root.label == 0
        assert tree.root.counts == (3, 7)

    def test_minority_recall_on_imbalanced_data(self, axis_separable):
        minority = axis_separable.labels == 1
        recalls = {}
        for name, matrix in (("cost", cm.default_from_counts(axis_separable.class_counts)),
                             ("unit", cm.unit(2))):
            labels, _ = predict_batch(fit(axis_separable, matrix), axis_separable.features)
            recalls[name] = float(np.mean(labels[minority] == 1))
        assert recalls["cost"] == 1.0
        assert recalls["cost"] >= recalls["unit"]

    def test_cost_sensitive_beats_unit_on_minority_recall(self):
        rng = np.random.default_rng(4)
        recall_cost, recall_unit = [], []
        for _ in range(5):
            n_major, n_minor = 190, 10
            X = np.vstack([rng.normal(0.0, 1.0, size=(n_major, 2)),
                           rng.normal(1.5, 1.0, size=(n_minor, 2))])
            y = np.repeat([0, 1], [n_major, n_minor])
            data = numeric_dataset(X, y)
            params = TreeParams(max_depth=2)
            for matrix, recalls in ((cm.default_from_counts(data.class_counts), recall_cost),
                                    (cm.unit(2), recall_unit)):
                labels, _ = predict_batch(fit(data, matrix, params), X)
                recalls.append(np.mean(labels[y == 1] == 1))
        assert np.mean(recall_cost) >= np.mean(recall_unit)

    def test_gain_is_strictly_positive_at_every_split(self, blobs):
        matrix = cm.default_from_counts(blobs.class_counts)
        tree = fit(blobs, matrix)
        for node in internal_nodes(tree.root):
            parent = label_node(node_counts(node, 2), matrix)[1]
            children = (label_node(node_counts(node.left, 2), matrix)[1]
                        + label_node(node_counts(node.right, 2), matrix)[1])
            assert children < parent - tree.params.min_gain

    def test_unit_leaves_use_majority(self, blobs):
        tree = fit(blobs, cm.unit(2))
        for leaf in tree.leaves():
            assert leaf.label == int(np.argmax(leaf.counts))

    def test_staircase_reaches_pure_leaves(self, staircase):
        tree = fit(staircase, cm.default_from_counts(staircase.class_counts))
        labels, _ = predict_batch(tree, staircase.features)
        np.testing.assert_array_equal(labels, staircase.labels)

    def test_class_count_mismatch(self, separable_1d):
        with pytest.raises(DataError, match="cost matrix has 3"):
            fit(separable_1d, cm.unit(3))

    def test_leaf_ids_are_preorder(self, staircase):
        tree = fit(staircase, cm.default_from_counts(staircase.class_counts))
        ids = [leaf.node_id for leaf in tree.leaves()]
        assert ids == sorted(ids)
        assert len(set(ids)) == len(ids)


class TestPredict:

    def test_routing_and_boundary(self, separable_1d):
        tree = fit(separable_1d, cm.unit(2))
        assert predict(tree, [1.0])[0] == 0
        assert predict(tree, [2.5])[0] == 0
        assert predict(tree, [2.5000001])[0] == 1

    def test_reproduces_training_labels(self, separable_1d):
        tree = fit(separable_1d, cm.unit(2))
        for x, y in zip(separable_1d.features, separable_1d.labels):
            assert predict(tree, x)[0] == y

    def test_batch_matches_single(self, blobs):
        tree = fit(blobs, cm.default_from_counts(blobs.class_counts), TreeParams(max_depth=4))
        rng = np.random.default_rng(8)
        X = rng.normal(0.0, 3.0, size=(500, 2))
        labels, probabilities = predict_batch(tree, X)
        for i in range(0, 500, 7):
            label, p = predict(tree, X[i])
            assert labels[i] == label
            np.testing.assert_array_equal(probabilities[i], p)

    def test_total_on_extreme_values(self, blobs):
        tree = fit(blobs, cm.default_from_counts(blobs.class_counts))
        X = np.array([[-1e300, 1e300], [1e300, -1e300], [0.0, 0.0]])
        labels, _ = predict_batch(tree, X)
        assert np.all(labels >= 0)

    def test_width_mismatch(self, separable_1d):
        tree = fit(separable_1d, cm.unit(2))
        with pytest.raises(DataError):
            predict(tree, [1.0, 2.0])
        with pytest.raises(DataError):
            predict_batch(tree, np.zeros((3, 2)))


# =============================================================================
# Serialization
# =============================================================================

class TestSerialization:

    def test_text_layout(self, separable_1d):
        text = dumps_tree(fit(separable_1d, cm.unit(2)))
        lines = text.splitlines()
        assert lines[0] == "x0 <= 2.5"
        assert lines[1] == "  class=A counts=[2, 0] p=[1.0, 0.0]"
        assert lines[2] == "  class=B counts=[0, 2] p=[0.0, 1.0]"

    def test_round_trip_is_exact(self, blobs):
        tree = fit(blobs, cm.default_from_counts(blobs.class_counts))
        text = dumps_tree(tree)
        loaded = loads_tree(text, blobs.schema)
        assert dumps_tree(loaded) == text
        labels, probabilities = predict_batch(tree, blobs.features)
        loaded_labels, loaded_probabilities = predict_batch(loaded, blobs.features)
        np.testing.assert_array_equal(labels, loaded_labels)
        np.testing.assert_array_equal(probabilities, loaded_probabilities)

    def test_bad_indentation(self, separable_1d):
        text = "x0 <= 2.5\nclass=A counts=[2, 0] p=[1.0, 0.0]\n"
        with pytest.raises(DataError, match="indentation"):
            loads_tree(text, separable_1d.schema)

    def test_unknown_feature(self, separable_1d):
        text = "x9 <= 2.5\n  class=A counts=[2, 0] p=[1.0, 0.0]\n  class=B counts=[0, 2] p=[0.0, 1.0]\n"
        with pytest.raises(DataError, match="unknown feature"):
            loads_tree(text, separable_1d.schema)
