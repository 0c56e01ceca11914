from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from functionality.dual_kge.forest import (
	LEAF,
	DecisionTree,
	Forest,
	ForestConfig,
	ForestError,
	forest_predict,
	forest_predict_batch,
	forest_train,
)


def _separable(n: int = 200, d: int = 4, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
	rng = np.random.default_rng(seed)
	X = rng.normal(size=(n, d))
	y = (X[:, 0] > 0).astype(np.int64)
	return X, y


def test_config_defaults_and_validation():
	cfg = ForestConfig()
	assert cfg.n_trees == 100 and cfg.max_depth is None and cfg.min_samples_split == 2
	assert cfg.mtry(100) == 10 and cfg.mtry(10) == 4 and cfg.mtry(1) == 1
	assert ForestConfig(features_per_split=50).mtry(8) == 8
	for bad in ({"n_trees": 0}, {"max_depth": -1}, {"min_samples_split": 1}, {"features_per_split": 0}):
		with pytest.raises(ValueError):
			ForestConfig(**bad)


def test_single_feature_stump_splits_at_midpoint():
	X = np.array([[0.0], [1.0], [2.0], [3.0]])
	y = np.array([0, 0, 1, 1])
	forest = forest_train(X, y, ForestConfig(n_trees=1, max_depth=1, bootstrap=False))
	tree = forest.trees[0]
	assert tree.feature[0] == 0 and tree.threshold[0] == pytest.approx(1.5)
	assert tree.depth == 1
	assert forest_predict(forest, np.array([1.4])) == (0, 0.0)
	assert forest_predict(forest, np.array([1.6])) == (1, 1.0)


def test_max_depth_zero_is_a_majority_leaf():
	X = np.array([[0.0], [1.0], [2.0]])
	y = np.array([1, 1, 0])
	forest = forest_train(X, y, ForestConfig(n_trees=3, max_depth=0, bootstrap=False))
	assert all(t.n_nodes == 1 and t.feature[0] == LEAF for t in forest.trees)
	labels, scores = forest_predict_batch(forest, np.array([[5.0], [-5.0]]))
	assert list(labels) == [1, 1] and list(scores) == [1.0, 1.0]


def test_pure_nodes_stop_growing():
	X, y = _separable()
	forest = forest_train(X, y, ForestConfig(n_trees=5, features_per_split=4, bootstrap=False))
	for tree in forest.trees:
		leaves = tree.feature == LEAF
		assert np.all((tree.counts[leaves] == 0).any(axis=1))


def test_separable_data_is_learned():
	X, y = _separable()
	forest = forest_train(X, y, ForestConfig(n_trees=25, seed=1))
	X_test, y_test = _separable(100, seed=9)
	labels, _ = forest_predict_batch(forest, X_test)
	assert (labels == y_test).mean() >= 0.9


def test_training_is_deterministic_and_parallel_safe():
	X, y = _separable(120, 6, seed=2)
	cfg = ForestConfig(n_trees=8, seed=3)
	a = forest_train(X, y, cfg)
	b = forest_train(X, y, cfg)
	with ThreadPoolExecutor(max_workers=4) as ex:
		c = forest_train(X, y, cfg, executor=ex)
	for other in (b, c):
		for t1, t2 in zip(a.trees, other.trees):
			assert np.array_equal(t1.feature, t2.feature)
			assert np.array_equal(t1.threshold, t2.threshold)
	assert not all(
		np.array_equal(t1.feature, t2.feature) and np.array_equal(t1.threshold, t2.threshold)
		for t1, t2 in zip(a.trees, forest_train(X, y, ForestConfig(n_trees=8, seed=4)).trees)
	)


def test_vote_tie_goes_to_zero():
	leaf_one = DecisionTree(
		feature=np.array([LEAF]), threshold=np.zeros(1), left=np.array([LEAF]), right=np.array([LEAF]), counts=np.array([[0, 3]])
	)
	leaf_zero = DecisionTree(
		feature=np.array([LEAF]), threshold=np.zeros(1), left=np.array([LEAF]), right=np.array([LEAF]), counts=np.array([[3, 0]])
	)
	forest = Forest(trees=[leaf_one, leaf_zero], n_features=2, config=ForestConfig(n_trees=2))
	assert forest_predict(forest, np.array([0.0, 0.0])) == (0, 0.5)
	# A leaf with equal class counts also predicts 0
	even = DecisionTree(
		feature=np.array([LEAF]), threshold=np.zeros(1), left=np.array([LEAF]), right=np.array([LEAF]), counts=np.array([[2, 2]])
	)
	assert list(even.leaf_labels()) == [0]


def test_training_and_prediction_errors():
	X, y = _separable(20)
	with pytest.raises(ForestError):
		forest_train(X, np.zeros(20, dtype=int), ForestConfig(n_trees=2))
	with pytest.raises(ForestError):
		forest_train(X, np.full(20, 2), ForestConfig(n_trees=2))
	with pytest.raises(ForestError):
		forest_train(X[:5], y, ForestConfig(n_trees=2))
	forest = forest_train(X, y, ForestConfig(n_trees=2))
	with pytest.raises(ForestError):
		forest_predict(forest, np.zeros(3))
	with pytest.raises(ForestError):
		forest_predict(forest, np.zeros((1, 4)))
