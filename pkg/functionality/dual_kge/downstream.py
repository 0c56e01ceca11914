from __future__ import annotations

"""Downstream use of trained embeddings.

Triple classification over Hadamard pair features with k-fold random-forest
evaluation, the Kruskal-Wallis comparison of approaches, and the clustering
diagnostics (Calinski-Harabasz, Davies-Bouldin, silhouette) of entity
embeddings grouped by type.
"""

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .forest import ForestConfig, ForestError, forest_predict_batch, forest_train
from .kge_models import EmbeddingModel
from .models import PairExample
from .trainer import DualModelState, SingleModelState

REPR_POS = "pos"
REPR_NEG = "neg"
REPR_CONCAT = "concat"
REPRS = (REPR_POS, REPR_NEG, REPR_CONCAT)

METRICS = ("precision", "recall", "f1", "auc")
CLUSTER_METRICS = ("calinski_harabasz", "davies_bouldin", "silhouette")

# Chi-square critical values at the 0.05 level for 1..10 degrees of freedom.
CHI2_CRITICAL_005 = {
	1: 3.841,
	2: 5.991,
	3: 7.815,
	4: 9.488,
	5: 11.070,
	6: 12.592,
	7: 14.067,
	8: 15.507,
	9: 16.919,
	10: 18.307,
}

EmbeddingSource = Union[DualModelState, SingleModelState, EmbeddingModel, np.ndarray]


class MetricError(ValueError):
	"""Raised when a metric is undefined for the given labels."""


# ---------------------------------------------------------------------- #
# Pair features
# ---------------------------------------------------------------------- #

def entity_matrix(source: EmbeddingSource, repr: str = REPR_CONCAT) -> np.ndarray:
	"""Entity rows of a trained source.

	Dual states honour `repr` (pos, neg or their concatenation); single
	models and raw matrices are returned as they are.
	"""
	if repr not in REPRS:
		raise ValueError(f"repr must be one of {', '.join(REPRS)}, got {repr!r}")
	if isinstance(source, DualModelState):
		if repr == REPR_POS:
			return source.pos_model.entity_params
		if repr == REPR_NEG:
			return source.neg_model.entity_params
		return np.concatenate([source.pos_model.entity_params, source.neg_model.entity_params], axis=1)
	if isinstance(source, SingleModelState):
		return source.model.entity_params
	if isinstance(source, EmbeddingModel):
		return source.entity_params
	matrix = np.asarray(source, dtype=np.float64)
	if matrix.ndim != 2:
		raise ValueError(f"expected an entity matrix, got shape {matrix.shape}")
	return matrix


def _check_entity(matrix: np.ndarray, idx: int) -> int:
	idx = int(idx)
	if not (0 <= idx < matrix.shape[0]):
		raise ValueError(f"entity index {idx} out of range (0..{matrix.shape[0] - 1})")
	return idx


def pair_features(source: EmbeddingSource, pair: PairExample, repr: str = REPR_CONCAT) -> np.ndarray:
	"""Hadamard product of the two entities' representations."""
	matrix = entity_matrix(source, repr)
	a = _check_entity(matrix, pair.e1)
	b = _check_entity(matrix, pair.e2)
	return matrix[a] * matrix[b]


def pair_feature_matrix(
	source: EmbeddingSource, pairs: Sequence[PairExample], repr: str = REPR_CONCAT
) -> tuple[np.ndarray, np.ndarray]:
	matrix = entity_matrix(source, repr)
	e1 = np.array([_check_entity(matrix, p.e1) for p in pairs], dtype=np.int64)
	e2 = np.array([_check_entity(matrix, p.e2) for p in pairs], dtype=np.int64)
	labels = np.array([p.label for p in pairs], dtype=np.int64)
	return matrix[e1] * matrix[e2], labels


def kfold_split(n: int, k: int, seed: int) -> np.ndarray:
	"""Fold id per example; a seeded shuffle dealt round-robin into k folds."""
	if k < 2:
		raise ValueError(f"k must be >= 2, got {k}")
	if n < k:
		raise ValueError(f"need at least k={k} examples, got {n}")
	perm = np.random.default_rng(seed).permutation(n)
	folds = np.empty(n, dtype=np.int64)
	folds[perm] = np.arange(n) % k
	return folds


# ---------------------------------------------------------------------- #
# Classification metrics
# ---------------------------------------------------------------------- #

class ClassificationScores(NamedTuple):
	precision: float
	recall: float
	f1: float
	auc: float


def midranks(values: np.ndarray) -> np.ndarray:
	"""1-based ranks with tied values sharing the mean of their positions."""
	x = np.asarray(values, dtype=np.float64).reshape(-1)
	sorter = np.argsort(x, kind="mergesort")
	xs = x[sorter]
	starts = np.r_[True, xs[1:] != xs[:-1]]
	group = np.cumsum(starts)
	bounds = np.r_[np.flatnonzero(starts), x.size]
	ranked = 0.5 * (bounds[group] + bounds[group - 1] + 1)
	out = np.empty(x.size, dtype=np.float64)
	out[sorter] = ranked
	return out


def rank_auc(true_labels: np.ndarray, scores: np.ndarray) -> float:
	"""Mann-Whitney AUC: share of (positive, negative) pairs ordered correctly, ties 1/2."""
	y = np.asarray(true_labels).astype(np.int64).reshape(-1)
	s = np.asarray(scores, dtype=np.float64).reshape(-1)
	n_pos = int((y == 1).sum())
	n_neg = int((y == 0).sum())
	if n_pos == 0 or n_neg == 0:
		raise MetricError("AUC needs both classes in the true labels")
	ranks = midranks(s)
	u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
	return float(u / (n_pos * n_neg))


def classification_metrics(
	true_labels: Sequence[int], predicted_labels: Sequence[int], scores: Sequence[float]
) -> ClassificationScores:
	"""Support-weighted precision, recall and F1 plus rank-statistic AUC."""
	y = np.asarray(true_labels).astype(np.int64).reshape(-1)
	p = np.asarray(predicted_labels).astype(np.int64).reshape(-1)
	s = np.asarray(scores, dtype=np.float64).reshape(-1)
	if not (y.size == p.size == s.size) or y.size == 0:
		raise ValueError(f"label and score vectors must have the same non-zero length ({y.size}, {p.size}, {s.size})")
	auc = rank_auc(y, s)
	precision = recall = f1 = 0.0
	for cls in (0, 1):
		support = int((y == cls).sum())
		if support == 0:
			continue
		tp = int(((y == cls) & (p == cls)).sum())
		predicted = int((p == cls).sum())
		pr = tp / predicted if predicted else 0.0
		re = tp / support
		f = 2 * pr * re / (pr + re) if (pr + re) > 0 else 0.0
		weight = support / y.size
		precision += weight * pr
		recall += weight * re
		f1 += weight * f
	return ClassificationScores(precision, recall, f1, auc)


# ---------------------------------------------------------------------- #
# Kruskal-Wallis
# ---------------------------------------------------------------------- #

class KruskalResult(NamedTuple):
	h: float
	df: int
	critical: float
	significant: bool


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> KruskalResult:
	"""Tie-corrected H statistic, judged against the tabulated 0.05 critical value."""
	arrays = [np.asarray(g, dtype=np.float64).reshape(-1) for g in groups]
	if len(arrays) < 2:
		raise ValueError(f"need at least 2 groups, got {len(arrays)}")
	if any(a.size == 0 for a in arrays):
		raise ValueError("every group must be non-empty")
	df = len(arrays) - 1
	if df not in CHI2_CRITICAL_005:
		raise ValueError(f"critical values are tabulated for 1..10 degrees of freedom, got {df}")
	pooled = np.concatenate(arrays)
	n = pooled.size
	ranks = midranks(pooled)
	h = 0.0
	offset = 0
	for a in arrays:
		r = ranks[offset : offset + a.size].sum()
		h += r * r / a.size
		offset += a.size
	h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
	_, ties = np.unique(pooled, return_counts=True)
	correction = 1.0 - float((ties ** 3 - ties).sum()) / (n ** 3 - n)
	h = 0.0 if correction <= 0.0 else h / correction
	critical = CHI2_CRITICAL_005[df]
	return KruskalResult(h=float(h), df=df, critical=critical, significant=bool(h > critical))


# ---------------------------------------------------------------------- #
# Clustering diagnostics
# ---------------------------------------------------------------------- #

class ClusteringScores(NamedTuple):
	calinski_harabasz: float
	davies_bouldin: float
	silhouette: float


def _cluster_index(labels: Sequence) -> tuple[np.ndarray, int]:
	_, inverse = np.unique(np.asarray([str(x) for x in labels]), return_inverse=True)
	k = int(inverse.max()) + 1 if inverse.size else 0
	if k < 2:
		raise MetricError(f"clustering metrics need at least 2 distinct labels, got {k}")
	return inverse.reshape(-1), k


def _silhouette(X: np.ndarray, inverse: np.ndarray, k: int, sizes: np.ndarray) -> float:
	n = X.shape[0]
	# Rows per block so one block of pairwise differences stays near 4M floats.
	chunk = max(1, 4_000_000 // max(1, n * X.shape[1]))
	dist_sums = np.zeros((n, k))
	for start in range(0, n, chunk):
		block = X[start : start + chunk]
		d = np.sqrt(np.maximum(((block[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1), 0.0))
		for c in range(k):
			dist_sums[start : start + chunk, c] = d[:, inverse == c].sum(axis=1)
	own = sizes[inverse]
	a = np.where(own > 1, dist_sums[np.arange(n), inverse] / np.maximum(own - 1, 1), 0.0)
	means = dist_sums / sizes[None, :]
	means[np.arange(n), inverse] = np.inf
	b = means.min(axis=1)
	denom = np.maximum(a, b)
	s = np.where((own > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
	return float(s.mean())


def clustering_metrics(embeddings: np.ndarray, type_labels: Sequence) -> ClusteringScores:
	"""Calinski-Harabasz, Davies-Bouldin and mean silhouette under Euclidean distance.

	A zero within-cluster dispersion gives CH = 1; coincident centroids are
	ignored by DB; rows alone in their cluster get silhouette 0.
	"""
	X = np.asarray(embeddings, dtype=np.float64)
	if X.ndim != 2 or X.shape[0] != len(type_labels):
		raise ValueError(f"embeddings must be an (n, d) matrix aligned with {len(type_labels)} labels")
	inverse, k = _cluster_index(type_labels)
	n = X.shape[0]
	sizes = np.bincount(inverse, minlength=k).astype(np.float64)
	centroids = np.zeros((k, X.shape[1]))
	np.add.at(centroids, inverse, X)
	centroids /= sizes[:, None]
	mean = X.mean(axis=0)

	between = float((sizes * ((centroids - mean) ** 2).sum(axis=1)).sum())
	within = float(((X - centroids[inverse]) ** 2).sum())
	ch = 1.0 if within == 0.0 else between * (n - k) / (within * (k - 1))

	scatter = np.zeros(k)
	np.add.at(scatter, inverse, np.linalg.norm(X - centroids[inverse], axis=1))
	scatter /= sizes
	cdist = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=-1)
	if np.allclose(scatter, 0.0) or np.allclose(cdist, 0.0):
		db = 0.0
	else:
		cdist[cdist == 0.0] = np.inf
		ratio = (scatter[:, None] + scatter[None, :]) / cdist
		db = float(ratio.max(axis=1).mean())

	return ClusteringScores(ch, db, _silhouette(X, inverse, k, sizes))


def normalize_clustering_table(rows: Mapping[str, ClusteringScores]) -> dict[str, dict[str, float]]:
	"""Min-max scale each metric across approaches to [0, 1], higher meaning better.

	Davies-Bouldin is inverted so its lowest value maps to 1. A metric that is
	equal for every approach maps to 1 everywhere.
	"""
	if not rows:
		return {}
	table: dict[str, dict[str, float]] = {name: {} for name in rows}
	for metric in CLUSTER_METRICS:
		values = np.array([getattr(scores, metric) for scores in rows.values()], dtype=np.float64)
		lo, hi = float(values.min()), float(values.max())
		for name, v in zip(rows, values):
			if hi == lo:
				table[name][metric] = 1.0
			elif metric == "davies_bouldin":
				table[name][metric] = (hi - float(v)) / (hi - lo)
			else:
				table[name][metric] = (float(v) - lo) / (hi - lo)
	return table


# ---------------------------------------------------------------------- #
# Triple classification
# ---------------------------------------------------------------------- #

@dataclass(frozen=True)
class FoldResult:
	fold: int
	n_train: int
	n_test: int
	scores: Optional[ClassificationScores] = None
	error: Optional[str] = None

	def to_payload(self) -> dict:
		payload: dict = {"fold": self.fold, "n_train": self.n_train, "n_test": self.n_test}
		if self.scores is not None:
			payload.update(self.scores._asdict())
		if self.error is not None:
			payload["error"] = self.error
		return payload


@dataclass(frozen=True)
class ClassificationReport:
	folds: tuple[FoldResult, ...]
	median: dict[str, float]

	@property
	def n_folds(self) -> int:
		return len(self.folds)

	def values(self, metric: str) -> list[float]:
		"""Per-fold values of one metric, skipping failed folds."""
		return [getattr(f.scores, metric) for f in self.folds if f.scores is not None]

	def to_payload(self) -> dict:
		return {
			"n_folds": self.n_folds,
			"folds": [f.to_payload() for f in self.folds],
			"median": dict(self.median),
		}


def evaluate_triple_classification(
	source: EmbeddingSource,
	pairs: Sequence[PairExample],
	forest_cfg: ForestConfig,
	k: int = 5,
	seed: int = 0,
	*,
	repr: str = REPR_CONCAT,
	auc_from_labels: bool = False,
	executor: Optional[Executor] = None,
) -> ClassificationReport:
	"""k-fold random-forest classification of labelled pairs, folds in order.

	A fold whose training part lacks a class, or whose test part makes a
	metric undefined, is kept in the report with its error message.
	"""
	X, y = pair_feature_matrix(source, pairs, repr)
	if np.unique(y).size < 2:
		raise MetricError("labelled pairs contain a single class")
	folds = kfold_split(len(pairs), k, seed)

	results: list[FoldResult] = []
	for fold in range(k):
		test_mask = folds == fold
		n_train, n_test = int((~test_mask).sum()), int(test_mask.sum())
		try:
			forest = forest_train(X[~test_mask], y[~test_mask], forest_cfg, executor=executor)
			predicted, votes = forest_predict_batch(forest, X[test_mask])
			scores = predicted.astype(np.float64) if auc_from_labels else votes
			metrics = classification_metrics(y[test_mask], predicted, scores)
		except (ForestError, MetricError) as exc:
			print(f"⚠️ Fold {fold} skipped: {exc}")
			results.append(FoldResult(fold, n_train, n_test, error=str(exc)))
			continue
		results.append(FoldResult(fold, n_train, n_test, scores=metrics))

	done = [r.scores for r in results if r.scores is not None]
	if not done:
		raise MetricError("every fold failed; no classification metrics available")
	median = {m: float(np.median([getattr(s, m) for s in done])) for m in METRICS}
	return ClassificationReport(folds=tuple(results), median=median)
