from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from functionality.dual_kge.evaluation import (
	TIE_MEAN,
	FilterIndex,
	RankingReport,
	evaluate_link_prediction,
	model_scorer,
	rank_filtered,
	sem_at_k,
	sem_at_ks,
	summed_scorer,
)
from functionality.dual_kge.kge_models import HEAD, TAIL, ModelKind, init_model, score_batch
from functionality.dual_kge.models import KnowledgeGraph, TypeMap, Vocabulary


def table_scorer(table: dict[tuple[int, int, int], float], default: float = 0.0):
	def scorer(triples: np.ndarray) -> np.ndarray:
		return np.array([table.get(tuple(int(x) for x in row), default) for row in triples], dtype=float)

	return scorer


def test_rank_counts_strictly_greater_candidates():
	# tails 1, 2, 3 score 5, 3, 1; the query (0, 0, 2) scores 3
	scorer = table_scorer({(0, 0, 1): 5.0, (0, 0, 2): 3.0, (0, 0, 3): 1.0}, default=-10.0)
	assert rank_filtered(scorer, (0, 0, 2), TAIL, [1, 2, 3], None) == 2
	assert rank_filtered(scorer, (0, 0, 1), TAIL, [1, 2, 3], None) == 1


def test_rank_filtering_removes_known_corruptions(toy_graphs):
	pos, _ = toy_graphs
	scorer = table_scorer({(0, 0, 1): 5.0, (0, 0, 2): 3.0}, default=-1.0)
	known = FilterIndex(KnowledgeGraph.from_triples(pos.vocab, [(0, 0, 1), (0, 0, 2)]))
	assert rank_filtered(scorer, (0, 0, 2), TAIL, range(4), known) == 1
	assert rank_filtered(scorer, (0, 0, 2), TAIL, range(4), known, filtered=False) == 2


def test_rank_is_one_when_everything_is_filtered(toy_graphs):
	pos, _ = toy_graphs
	rows = [(0, 0, t) for t in range(4)]
	known = FilterIndex(KnowledgeGraph.from_triples(pos.vocab, rows))
	scorer = table_scorer({}, default=0.0)
	assert rank_filtered(scorer, (0, 0, 1), TAIL, range(4), known) == 1


def test_rank_tie_conventions():
	scorer = table_scorer({}, default=1.0)
	assert rank_filtered(scorer, (0, 0, 1), HEAD, range(5), None) == 1
	# four other candidates tie with the query
	assert rank_filtered(scorer, (0, 0, 1), HEAD, range(5), None, tie=TIE_MEAN) == 3.0
	with pytest.raises(ValueError):
		rank_filtered(scorer, (0, 0, 1), HEAD, range(5), None, tie="pessimistic")


def test_report_from_ranks():
	report = RankingReport.from_ranks([1, 2], [4, 1], ks=(1, 10))
	assert report.mrr_head == pytest.approx(0.75)
	assert report.mrr_tail == pytest.approx(0.625)
	assert report.mrr_avg == pytest.approx(0.6875)
	assert report.hits[1] == (0.5, 0.5, 0.5)
	assert report.hits[10] == (1.0, 1.0, 1.0)
	payload = report.to_payload()
	assert payload["n_test"] == 2 and payload["hits@1"]["avg"] == 0.5


def _brute_force_mrr(scores: np.ndarray, test: KnowledgeGraph, known: set) -> tuple[float, float]:
	n = scores.shape[0]
	head_rr, tail_rr = [], []
	for h, r, t in test.triples:
		target = scores[h, r, t]
		better_h = sum(1 for e in range(n) if e != h and (e, r, t) not in known and scores[e, r, t] > target)
		better_t = sum(1 for e in range(n) if e != t and (h, r, e) not in known and scores[h, r, e] > target)
		head_rr.append(1.0 / (1 + better_h))
		tail_rr.append(1.0 / (1 + better_t))
	return float(np.mean(head_rr)), float(np.mean(tail_rr))


def test_mrr_matches_brute_force_on_twenty_entities():
	rng = np.random.default_rng(0)
	n_ent, n_rel = 20, 3
	vocab = Vocabulary([f"e{i}" for i in range(n_ent)], [f"r{i}" for i in range(n_rel)])
	rows = {(int(a), int(b), int(c)) for a, b, c in zip(rng.integers(n_ent, size=80), rng.integers(n_rel, size=80), rng.integers(n_ent, size=80))}
	rows = sorted(rows)
	train = KnowledgeGraph.from_triples(vocab, rows[:60])
	test = KnowledgeGraph.from_triples(vocab, rows[60:])
	scores = rng.normal(size=(n_ent, n_rel, n_ent))

	def scorer(triples: np.ndarray) -> np.ndarray:
		return scores[triples[:, 0], triples[:, 1], triples[:, 2]]

	report = evaluate_link_prediction(scorer, test, train)
	head, tail = _brute_force_mrr(scores, test, set(train.triples) | set(test.triples))
	assert report.mrr_head == pytest.approx(head, abs=1e-12)
	assert report.mrr_tail == pytest.approx(tail, abs=1e-12)
	assert report.hits[1][2] <= report.hits[10][2]
	assert report.hits[1][2] <= report.mrr_avg


def test_filtered_ranks_never_exceed_raw(synthetic_graphs):
	pos, _ = synthetic_graphs
	train, test = pos.subgraph(pos.triples[:300]), pos.subgraph(pos.triples[300:])
	scorer = model_scorer(init_model(ModelKind("distmult"), 6, pos.vocab.n_entities, pos.vocab.n_relations, seed=1))
	filtered = evaluate_link_prediction(scorer, test, train)
	raw = evaluate_link_prediction(scorer, test, train, filtered=False)
	assert all(f <= r for f, r in zip(filtered.head_ranks, raw.head_ranks))
	assert all(f <= r for f, r in zip(filtered.tail_ranks, raw.tail_ranks))
	train_only = evaluate_link_prediction(scorer, test, train, filter_train_only=True)
	assert filtered.mrr_avg >= train_only.mrr_avg


def test_monotone_transform_keeps_ranks(synthetic_graphs):
	pos, _ = synthetic_graphs
	train, test = pos.subgraph(pos.triples[:300]), pos.subgraph(pos.triples[300:])
	model = init_model(ModelKind("transe"), 5, pos.vocab.n_entities, pos.vocab.n_relations, seed=3)
	base = evaluate_link_prediction(model_scorer(model), test, train)
	shifted = evaluate_link_prediction(lambda x: 3.0 * score_batch(model, x) + 7.0, test, train)
	assert base.head_ranks == shifted.head_ranks and base.tail_ranks == shifted.tail_ranks


def test_parallel_evaluation_matches_serial(synthetic_graphs):
	pos, _ = synthetic_graphs
	train, test = pos.subgraph(pos.triples[:280]), pos.subgraph(pos.triples[280:])
	scorer = model_scorer(init_model(ModelKind("complex"), 4, pos.vocab.n_entities, pos.vocab.n_relations, seed=2))
	serial = evaluate_link_prediction(scorer, test, train)
	with ThreadPoolExecutor(max_workers=3) as ex:
		parallel = evaluate_link_prediction(scorer, test, train, executor=ex)
	assert serial == parallel


def test_link_prediction_errors(toy_graphs):
	pos, _ = toy_graphs
	scorer = table_scorer({})
	with pytest.raises(ValueError):
		evaluate_link_prediction(scorer, pos.subgraph([]), pos)
	other = KnowledgeGraph.from_triples(Vocabulary(["a", "b"], ["r"]), [(0, 0, 1)])
	with pytest.raises(ValueError):
		evaluate_link_prediction(scorer, other, pos)


def test_sem_equals_hits_at_one_with_unique_types(synthetic_graphs):
	pos, _ = synthetic_graphs
	train, test = pos.subgraph(pos.triples[:300]), pos.subgraph(pos.triples[300:])
	types = TypeMap({e: f"T{e}" for e in range(pos.vocab.n_entities)})
	scorer = model_scorer(init_model(ModelKind("complex"), 6, pos.vocab.n_entities, pos.vocab.n_relations, seed=7))
	hits = evaluate_link_prediction(scorer, test, train, ks=(1,))
	sem = sem_at_k(scorer, test, train, types, 1)
	assert sem.sem[1][0] == pytest.approx(hits.hits[1][0])
	assert sem.sem[1][1] == pytest.approx(hits.hits[1][1])
	assert sem.n_scored == 2 * len(test)


def test_sem_equals_hits_at_one_when_scores_tie():
	vocab = Vocabulary(["a", "b", "c"], ["r"])
	test = KnowledgeGraph.from_triples(vocab, [(0, 0, 2)])
	types = TypeMap({0: "A", 1: "B", 2: "C"})
	# every candidate ties; the ground truth c sits behind lower-index entities
	scorer = table_scorer({}, default=0.0)
	hits = evaluate_link_prediction(scorer, test, test, ks=(1,))
	sem = sem_at_k(scorer, test, test, types, 1)
	assert hits.hits[1] == (1.0, 1.0, 1.0)
	assert sem.sem[1] == hits.hits[1]


def test_sem_is_one_with_a_single_shared_type(toy_graphs):
	pos, _ = toy_graphs
	types = TypeMap({e: "Thing" for e in range(4)})
	scorer = table_scorer({}, default=0.0)
	report = sem_at_ks(scorer, pos.subgraph(pos.triples[:1]), pos, types, ks=(1, 2))
	assert report.sem[1] == (1.0, 1.0, 1.0)
	assert report.sem[2] == (1.0, 1.0, 1.0)


def test_sem_two_candidates_one_compatible():
	vocab = Vocabulary(["a", "b", "c"], ["r"])
	test = KnowledgeGraph.from_triples(vocab, [(0, 0, 1)])
	train = KnowledgeGraph.from_triples(vocab, [(0, 0, 1)])
	# Only the tail direction is typed; the two tail candidates are b (Person) and c (Country).
	types = TypeMap({1: "Person", 2: "Country"})
	scorer = table_scorer({(0, 0, 1): 2.0, (0, 0, 2): 1.0, (0, 0, 0): -5.0})
	report = sem_at_k(scorer, test, train, types, 2)
	assert report.n_head == 0 and report.n_tail == 1
	assert report.sem[2][1] == pytest.approx(0.5)
	assert report.sem[2][0] == 0.0


def test_sem_untyped_prediction_scores_zero():
	vocab = Vocabulary(["a", "b", "c"], ["r"])
	test = KnowledgeGraph.from_triples(vocab, [(0, 0, 1)])
	types = TypeMap({1: "Person"})
	# c outscores the true tail b and has no type
	scorer = table_scorer({(0, 0, 2): 9.0, (0, 0, 1): 1.0})
	report = sem_at_k(scorer, test, test, types, 1)
	assert report.sem[1][1] == 0.0


def test_sem_short_pool_warns_and_divides_by_k(capsys):
	vocab = Vocabulary(["a", "b"], ["r"])
	kg = KnowledgeGraph.from_triples(vocab, [(0, 0, 1)])
	types = TypeMap({0: "T", 1: "T"})
	report = sem_at_k(table_scorer({}), kg, kg, types, 10)
	# two tail candidates, both compatible, divided by 10
	assert report.sem[10][1] == pytest.approx(0.2)
	assert "fewer than K" in capsys.readouterr().out


def test_sem_without_typed_queries_reports_zero(toy_graphs, capsys):
	pos, _ = toy_graphs
	report = sem_at_k(table_scorer({}), pos, pos, TypeMap({}), 1)
	assert report.sem[1] == (0.0, 0.0, 0.0)
	assert report.n_scored == 0
	assert "No test triple" in capsys.readouterr().out
	with pytest.raises(ValueError):
		sem_at_k(table_scorer({}), pos, pos, TypeMap({}), 0)


def test_summed_scorer_adds_both_models():
	a = init_model(ModelKind("distmult"), 3, 4, 2, seed=0)
	b = init_model(ModelKind("distmult"), 3, 4, 2, seed=1)
	triples = np.array([[0, 1, 2], [3, 0, 1]])
	assert np.allclose(summed_scorer(a, b)(triples), score_batch(a, triples) + score_batch(b, triples))
