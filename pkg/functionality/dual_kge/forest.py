from __future__ import annotations

"""Random forest of CART trees for binary labels.

Each tree is grown on a bootstrap resample with Gini-impurity splits over a
random subset of features per node. Per-tree random streams are spawned from
the forest seed, so trees can be grown in any order (or in parallel) and the
forest is still reproducible.
"""

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

LEAF = -1


class ForestError(ValueError):
	"""Raised for untrainable data or feature-width mismatches."""


@dataclass(frozen=True)
class ForestConfig:
	n_trees: int = 100
	max_depth: Optional[int] = None
	min_samples_split: int = 2
	features_per_split: Optional[int] = None
	bootstrap: bool = True
	seed: int = 0

	def __post_init__(self) -> None:
		if self.n_trees < 1:
			raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
		if self.max_depth is not None and self.max_depth < 0:
			raise ValueError(f"max_depth must be >= 0 or None, got {self.max_depth}")
		if self.min_samples_split < 2:
			raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
		if self.features_per_split is not None and self.features_per_split < 1:
			raise ValueError(f"features_per_split must be >= 1, got {self.features_per_split}")

	def mtry(self, n_features: int) -> int:
		if self.features_per_split is None:
			return max(1, math.ceil(math.sqrt(n_features)))
		return min(self.features_per_split, n_features)


@dataclass
class DecisionTree:
	"""Flat array encoding; `feature[i] == LEAF` marks a leaf."""

	feature: np.ndarray
	threshold: np.ndarray
	left: np.ndarray
	right: np.ndarray
	counts: np.ndarray  # (n_nodes, 2) class counts

	@property
	def n_nodes(self) -> int:
		return int(self.feature.size)

	@property
	def depth(self) -> int:
		depth = np.zeros(self.n_nodes, dtype=np.int64)
		for i in range(self.n_nodes):
			if self.feature[i] != LEAF:
				depth[self.left[i]] = depth[i] + 1
				depth[self.right[i]] = depth[i] + 1
		return int(depth.max())

	def leaf_labels(self) -> np.ndarray:
		# Majority class; ties go to 0.
		return (self.counts[:, 1] > self.counts[:, 0]).astype(np.int64)

	def predict(self, X: np.ndarray) -> np.ndarray:
		node = np.zeros(X.shape[0], dtype=np.int64)
		active = self.feature[node] != LEAF
		while active.any():
			rows = np.flatnonzero(active)
			cur = node[rows]
			go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
			node[rows] = np.where(go_left, self.left[cur], self.right[cur])
			active = self.feature[node] != LEAF
		return self.leaf_labels()[node]


@dataclass
class Forest:
	trees: list[DecisionTree]
	n_features: int
	config: ForestConfig = field(repr=False)

	@property
	def n_trees(self) -> int:
		return len(self.trees)


def _best_split_on(x: np.ndarray, y: np.ndarray) -> Optional[tuple[float, float]]:
	"""(weighted Gini, threshold) of the best `x <= thr` split, or None if x is constant."""
	order = np.argsort(x, kind="stable")
	xs, ys = x[order], y[order]
	valid = xs[1:] > xs[:-1]
	if not valid.any():
		return None
	n = xs.size
	total1 = ys.sum()
	n_left = np.arange(1, n, dtype=np.float64)
	n_right = n - n_left
	left1 = np.cumsum(ys)[:-1].astype(np.float64)
	right1 = total1 - left1
	gini_left = 1.0 - (left1 / n_left) ** 2 - ((n_left - left1) / n_left) ** 2
	gini_right = 1.0 - (right1 / n_right) ** 2 - ((n_right - right1) / n_right) ** 2
	weighted = (n_left * gini_left + n_right * gini_right) / n
	weighted = np.where(valid, weighted, np.inf)
	i = int(np.argmin(weighted)) + 1
	thr = (xs[i - 1] + xs[i]) / 2.0
	if thr >= xs[i]:
		thr = xs[i - 1]
	return float(weighted[i - 1]), float(thr)


def _grow_tree(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, rng: np.random.Generator) -> DecisionTree:
	n, n_features = X.shape
	sample = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
	mtry = cfg.mtry(n_features)

	feature: list[int] = []
	threshold: list[float] = []
	left: list[int] = []
	right: list[int] = []
	counts: list[tuple[int, int]] = []

	def new_node(idx: np.ndarray) -> int:
		ones = int(y[idx].sum())
		feature.append(LEAF)
		threshold.append(0.0)
		left.append(LEAF)
		right.append(LEAF)
		counts.append((idx.size - ones, ones))
		return len(feature) - 1

	root = new_node(sample)
	stack: list[tuple[int, np.ndarray, int]] = [(root, sample, 0)]
	while stack:
		node, idx, depth = stack.pop()
		zeros, ones = counts[node]
		if zeros == 0 or ones == 0:
			continue
		if idx.size < cfg.min_samples_split:
			continue
		if cfg.max_depth is not None and depth >= cfg.max_depth:
			continue

		perm = rng.permutation(n_features)
		best: Optional[tuple[float, float, int]] = None
		for pos, f in enumerate(perm):
			# Keep drawing features past mtry only until one is splittable.
			if pos >= mtry and best is not None:
				break
			found = _best_split_on(X[idx, f], y[idx])
			if found is not None and (best is None or found[0] < best[0]):
				best = (found[0], found[1], int(f))
		if best is None:
			continue

		_, thr, f = best
		mask = X[idx, f] <= thr
		l_node = new_node(idx[mask])
		r_node = new_node(idx[~mask])
		feature[node] = f
		threshold[node] = thr
		left[node] = l_node
		right[node] = r_node
		stack.append((r_node, idx[~mask], depth + 1))
		stack.append((l_node, idx[mask], depth + 1))

	return DecisionTree(
		feature=np.asarray(feature, dtype=np.int64),
		threshold=np.asarray(threshold, dtype=np.float64),
		left=np.asarray(left, dtype=np.int64),
		right=np.asarray(right, dtype=np.int64),
		counts=np.asarray(counts, dtype=np.int64).reshape(-1, 2),
	)


def _check_training_data(features: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
	X = np.asarray(features, dtype=np.float64)
	y = np.asarray(labels).astype(np.int64).reshape(-1)
	if X.ndim != 2 or X.shape[0] != y.size:
		raise ForestError(f"features must be an (n, d) matrix aligned with {y.size} labels, got shape {X.shape}")
	if y.size < 2:
		raise ForestError("need at least 2 training examples")
	if not np.isin(y, (0, 1)).all():
		raise ForestError("labels must be 0 or 1")
	if np.unique(y).size < 2:
		raise ForestError("training labels contain a single class")
	return X, y


def forest_train(
	features: np.ndarray, labels: np.ndarray, cfg: ForestConfig, *, executor: Optional[Executor] = None
) -> Forest:
	"""Grow cfg.n_trees trees; tree i always uses the i-th spawned seed."""
	X, y = _check_training_data(features, labels)
	seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)

	def grow(seq: np.random.SeedSequence) -> DecisionTree:
		return _grow_tree(X, y, cfg, np.random.default_rng(seq))

	trees = [grow(s) for s in seeds] if executor is None else list(executor.map(grow, seeds))
	return Forest(trees=trees, n_features=X.shape[1], config=cfg)


def forest_predict_batch(forest: Forest, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
	"""Majority-vote labels (ties to 0) and vote-for-1 fractions for each row."""
	X = np.asarray(features, dtype=np.float64)
	if X.ndim != 2 or X.shape[1] != forest.n_features:
		raise ForestError(f"expected feature width {forest.n_features}, got shape {X.shape}")
	votes = np.zeros(X.shape[0], dtype=np.int64)
	for tree in forest.trees:
		votes += tree.predict(X)
	labels = (2 * votes > forest.n_trees).astype(np.int64)
	return labels, votes / forest.n_trees


def forest_predict(forest: Forest, features: np.ndarray) -> tuple[int, float]:
	x = np.asarray(features, dtype=np.float64)
	if x.ndim != 1:
		raise ForestError(f"expected a single feature vector, got shape {x.shape}")
	labels, scores = forest_predict_batch(forest, x.reshape(1, -1))
	return int(labels[0]), float(scores[0])
