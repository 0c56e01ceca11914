import itertools

import numpy as np
import pytest

from functionality.dual_kge.downstream import (
	CHI2_CRITICAL_005,
	REPR_NEG,
	REPR_POS,
	ClassificationScores,
	ClusteringScores,
	FoldResult,
	MetricError,
	classification_metrics,
	clustering_metrics,
	entity_matrix,
	evaluate_triple_classification,
	kfold_split,
	kruskal_wallis,
	midranks,
	normalize_clustering_table,
	pair_feature_matrix,
	pair_features,
	rank_auc,
)
from functionality.dual_kge.forest import ForestConfig
from functionality.dual_kge.kge_models import ModelKind, init_model
from functionality.dual_kge.models import PairExample
from functionality.dual_kge.trainer import DualModelState


def _dual_state(dim: int = 3, n_entities: int = 5) -> DualModelState:
	kind = ModelKind("complex")
	return DualModelState(
		pos_model=init_model(kind, dim, n_entities, 1, seed=0),
		neg_model=init_model(kind, dim, n_entities, 1, seed=1),
		epoch=0,
		rng=np.random.default_rng(0),
	)


def test_pair_features_hadamard():
	matrix = np.array([[1.0, 2.0], [3.0, 4.0], [0.0, 0.0]])
	assert list(pair_features(matrix, PairExample(0, 1, 1))) == [3.0, 8.0]
	assert not pair_features(matrix, PairExample(0, 2, 0)).any()
	with pytest.raises(ValueError):
		pair_features(matrix, PairExample(0, 3, 1))


def test_entity_matrix_representations():
	state = _dual_state()
	assert entity_matrix(state).shape == (5, 12)
	assert np.array_equal(entity_matrix(state, REPR_POS), state.pos_model.entity_params)
	assert np.array_equal(entity_matrix(state, REPR_NEG), state.neg_model.entity_params)
	assert entity_matrix(state.pos_model).shape == (5, 6)
	with pytest.raises(ValueError):
		entity_matrix(state, "sum")
	X, y = pair_feature_matrix(state, [PairExample(0, 1, 1), PairExample(2, 3, 0)])
	assert X.shape == (2, 12) and list(y) == [1, 0]


def test_kfold_split():
	folds = kfold_split(10, 5, seed=3)
	assert sorted(np.bincount(folds).tolist()) == [2, 2, 2, 2, 2]
	assert np.array_equal(folds, kfold_split(10, 5, seed=3))
	sizes = np.bincount(kfold_split(11, 5, seed=0))
	assert sizes.max() - sizes.min() <= 1
	with pytest.raises(ValueError):
		kfold_split(4, 5, seed=0)


def test_metrics_worked_example():
	scores = classification_metrics([1, 1, 0, 0], [1, 0, 0, 0], [0.9, 0.4, 0.2, 0.1])
	assert scores.f1 == pytest.approx(0.7333, abs=1e-4)
	assert scores.precision == pytest.approx((1.0 + 2 / 3) / 2)
	assert scores.recall == pytest.approx(0.75)
	assert scores.auc == 1.0


def test_metrics_perfect_and_flipped():
	y = np.array([1, 0, 1, 0, 1])
	assert classification_metrics(y, y, y) == ClassificationScores(1.0, 1.0, 1.0, 1.0)
	flipped = 1 - y
	assert classification_metrics(flipped, flipped, flipped).f1 == 1.0


def test_auc_requires_both_classes():
	with pytest.raises(MetricError):
		rank_auc([1, 1, 1], [0.1, 0.2, 0.3])


def test_auc_matches_pairwise_brute_force():
	rng = np.random.default_rng(4)
	y = rng.integers(0, 2, size=300)
	s = np.round(rng.random(300), 2)  # rounding forces ties
	pos, neg = s[y == 1], s[y == 0]
	brute = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p, q in itertools.product(pos, neg)) / (pos.size * neg.size)
	assert rank_auc(y, s) == pytest.approx(brute, abs=1e-12)


def test_metrics_match_sklearn():
	sk = pytest.importorskip("sklearn.metrics")
	rng = np.random.default_rng(5)
	y = rng.integers(0, 2, size=200)
	s = rng.random(200)
	p = (s > 0.3).astype(int)
	ours = classification_metrics(y, p, s)
	assert ours.precision == pytest.approx(sk.precision_score(y, p, average="weighted"))
	assert ours.recall == pytest.approx(sk.recall_score(y, p, average="weighted"))
	assert ours.f1 == pytest.approx(sk.f1_score(y, p, average="weighted"))
	assert ours.auc == pytest.approx(sk.roc_auc_score(y, s))


def test_midranks_share_tied_positions():
	assert list(midranks(np.array([3.0, 1.0, 3.0, 2.0]))) == [3.5, 1.0, 3.5, 2.0]


def test_kruskal_worked_example():
	result = kruskal_wallis([[1, 2, 3], [4, 5, 6]])
	assert result.h == pytest.approx(3.857, abs=1e-3)
	assert result.df == 1 and result.critical == CHI2_CRITICAL_005[1]
	assert result.significant


def test_kruskal_identical_values_give_zero():
	result = kruskal_wallis([[2.0, 2.0], [2.0, 2.0], [2.0]])
	assert result.h == 0.0 and not result.significant


def test_kruskal_errors():
	with pytest.raises(ValueError):
		kruskal_wallis([[1.0, 2.0]])
	with pytest.raises(ValueError):
		kruskal_wallis([[1.0], []])
	with pytest.raises(ValueError):
		kruskal_wallis([[float(i)] for i in range(12)])


def test_kruskal_matches_scipy_with_ties():
	stats = pytest.importorskip("scipy.stats")
	rng = np.random.default_rng(6)
	groups = [np.round(rng.normal(loc=i * 0.3, size=5), 1) for i in range(4)]
	ours = kruskal_wallis(groups)
	assert ours.h == pytest.approx(stats.kruskal(*groups).statistic, rel=1e-9)


def _brute_force_silhouette(X: np.ndarray, labels: list) -> float:
	values = []
	for i in range(len(labels)):
		same = [j for j in range(len(labels)) if labels[j] == labels[i] and j != i]
		if not same:
			values.append(0.0)
			continue
		a = np.mean([np.linalg.norm(X[i] - X[j]) for j in same])
		b = min(
			np.mean([np.linalg.norm(X[i] - X[j]) for j in range(len(labels)) if labels[j] == c])
			for c in set(labels)
			if c != labels[i]
		)
		values.append((b - a) / max(a, b) if max(a, b) > 0 else 0.0)
	return float(np.mean(values))


def test_silhouette_matches_pointwise_definition():
	X = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])
	labels = ["A", "A", "B", "B"]
	scores = clustering_metrics(X, labels)
	assert scores.silhouette == pytest.approx(_brute_force_silhouette(X, labels), abs=1e-12)
	assert 0.89 < scores.silhouette < 0.91


def test_clustering_matches_sklearn():
	sk = pytest.importorskip("sklearn.metrics")
	rng = np.random.default_rng(7)
	X = rng.normal(size=(60, 5))
	labels = [f"T{i % 3}" for i in range(60)]
	X[np.arange(60) % 3 == 1] += 2.0
	ours = clustering_metrics(X, labels)
	assert ours.calinski_harabasz == pytest.approx(sk.calinski_harabasz_score(X, labels), rel=1e-9)
	assert ours.davies_bouldin == pytest.approx(sk.davies_bouldin_score(X, labels), rel=1e-9)
	assert ours.silhouette == pytest.approx(sk.silhouette_score(X, labels), rel=1e-9)
	assert ours.silhouette == pytest.approx(_brute_force_silhouette(X, labels), abs=1e-12)


def test_two_singleton_clusters():
	scores = clustering_metrics(np.array([[0.0], [10.0]]), ["a", "b"])
	assert scores.davies_bouldin == 0.0
	assert scores.calinski_harabasz == 1.0
	assert scores.silhouette == 0.0


def test_calinski_harabasz_under_duplication():
	rng = np.random.default_rng(8)
	X = rng.normal(size=(30, 3))
	labels = [i % 3 for i in range(30)]
	n, k = 30, 3
	once = clustering_metrics(X, labels).calinski_harabasz
	twice = clustering_metrics(np.vstack([X, X]), labels + labels).calinski_harabasz
	assert twice == pytest.approx(once * (2 * n - k) / (n - k), rel=1e-9)


def test_clustering_needs_two_labels():
	with pytest.raises(MetricError):
		clustering_metrics(np.zeros((3, 2)), ["x", "x", "x"])
	with pytest.raises(ValueError):
		clustering_metrics(np.zeros((3, 2)), ["x", "y"])


def test_normalize_clustering_table():
	table = normalize_clustering_table(
		{"dual": ClusteringScores(20.0, 1.0, 0.5), "baseline": ClusteringScores(10.0, 2.0, 0.5)}
	)
	assert table["dual"] == {"calinski_harabasz": 1.0, "davies_bouldin": 1.0, "silhouette": 1.0}
	assert table["baseline"] == {"calinski_harabasz": 0.0, "davies_bouldin": 0.0, "silhouette": 1.0}
	assert normalize_clustering_table({}) == {}


def _separable_pairs(n_pairs: int = 500, seed: int = 0) -> tuple[np.ndarray, list[PairExample]]:
	rng = np.random.default_rng(seed)
	matrix = rng.normal(size=(200, 2))
	pairs = []
	for _ in range(n_pairs):
		a, b = (int(x) for x in rng.choice(200, size=2, replace=False))
		pairs.append(PairExample(a, b, int(matrix[a, 0] * matrix[b, 0] > 0)))
	return matrix, pairs


def test_triple_classification_on_separable_pairs():
	matrix, pairs = _separable_pairs()
	report = evaluate_triple_classification(matrix, pairs, ForestConfig(n_trees=20, seed=1), k=5, seed=0)
	assert report.n_folds == 5
	assert sum(f.n_test for f in report.folds) == 500
	assert all(f.error is None for f in report.folds)
	assert report.median["f1"] >= 0.95
	assert report.median["auc"] >= 0.98
	assert len(report.values("f1")) == 5
	payload = report.to_payload()
	assert payload["n_folds"] == 5 and set(payload["median"]) == {"precision", "recall", "f1", "auc"}


def test_triple_classification_is_deterministic():
	matrix, pairs = _separable_pairs(100, seed=2)
	cfg = ForestConfig(n_trees=5, seed=3)
	a = evaluate_triple_classification(matrix, pairs, cfg, k=5, seed=1)
	b = evaluate_triple_classification(matrix, pairs, cfg, k=5, seed=1)
	assert a == b


def test_triple_classification_failed_folds(capsys):
	matrix = np.arange(20, dtype=float).reshape(10, 2)
	pairs = [PairExample(i, (i + 1) % 10, int(i == 0)) for i in range(10)]
	with pytest.raises(MetricError):
		evaluate_triple_classification(matrix, pairs, ForestConfig(n_trees=2), k=5)
	assert "Fold" in capsys.readouterr().out
	with pytest.raises(MetricError):
		evaluate_triple_classification(matrix, [PairExample(0, 1, 1), PairExample(1, 2, 1)], ForestConfig(n_trees=2), k=2)


def test_fold_result_payload():
	ok = FoldResult(0, 8, 2, scores=ClassificationScores(1.0, 0.5, 0.6, 0.7))
	assert ok.to_payload() == {"fold": 0, "n_train": 8, "n_test": 2, "precision": 1.0, "recall": 0.5, "f1": 0.6, "auc": 0.7}
	failed = FoldResult(1, 8, 2, error="boom")
	assert failed.to_payload()["error"] == "boom"
