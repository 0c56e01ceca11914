from __future__ import annotations

"""Link-prediction ranking and type-aware Sem@K.

A scorer is any callable mapping an (n, 3) int array of triples to n scores,
higher meaning more plausible. Ranks are filtered by default: corruptions
that are themselves known triples (other than the query) leave the pool.
"""

from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .kge_models import HEAD, TAIL, EmbeddingModel, score_batch
from .models import KnowledgeGraph, Triple, TypeMap

Scorer = Callable[[np.ndarray], np.ndarray]

TIE_OPTIMISTIC = "optimistic"
TIE_MEAN = "mean"
DEFAULT_KS = (1, 10)


def model_scorer(model: EmbeddingModel) -> Scorer:
	return lambda triples: score_batch(model, triples)


def summed_scorer(pos_model: EmbeddingModel, neg_model: EmbeddingModel) -> Scorer:
	"""Experimental scorer for the concatenated representation: sum of both models' scores."""
	return lambda triples: score_batch(pos_model, triples) + score_batch(neg_model, triples)


class FilterIndex:
	"""Membership index of known-true triples used for filtering."""

	def __init__(self, *graphs: KnowledgeGraph) -> None:
		self._known: set[Triple] = set()
		for kg in graphs:
			self._known.update(kg.triple_set)

	def __contains__(self, item: object) -> bool:
		if not isinstance(item, tuple) or len(item) != 3:
			return False
		return Triple(int(item[0]), int(item[1]), int(item[2])) in self._known

	def __len__(self) -> int:
		return len(self._known)


def _corrupt_all(triple: Triple, slot: str, entities: np.ndarray) -> np.ndarray:
	out = np.empty((entities.size, 3), dtype=np.int64)
	out[:, 0] = triple.head
	out[:, 1] = triple.relation
	out[:, 2] = triple.tail
	if slot == HEAD:
		out[:, 0] = entities
	elif slot == TAIL:
		out[:, 2] = entities
	else:
		raise ValueError(f"slot must be {HEAD!r} or {TAIL!r}, got {slot!r}")
	return out


def _candidate_pool(
	triple: Triple, slot: str, entities: np.ndarray, known: Optional[FilterIndex]
) -> tuple[np.ndarray, np.ndarray]:
	"""Candidate entities and their triples after filtering; the query itself always stays."""
	cands = _corrupt_all(triple, slot, entities)
	if known is None:
		return entities, cands
	keep = np.fromiter(
		((tuple(row) == tuple(triple)) or (tuple(row) not in known) for row in cands.tolist()),
		dtype=bool,
		count=cands.shape[0],
	)
	return entities[keep], cands[keep]


def _as_triple(triple: Sequence[int]) -> Triple:
	return Triple(int(triple[0]), int(triple[1]), int(triple[2]))


def rank_filtered(
	scorer: Scorer,
	test_triple: Sequence[int],
	slot: str,
	all_entities: Iterable[int],
	known_triples: Optional[FilterIndex],
	*,
	filtered: bool = True,
	tie: str = TIE_OPTIMISTIC,
) -> float:
	"""Rank of `test_triple` among all corruptions of `slot`.

	Optimistic ties give 1 + (#candidates scoring strictly higher). The mean
	convention adds half the number of other candidates that tie exactly.
	With `filtered=False` (or no index) nothing is removed and the raw rank results.
	"""
	if tie not in (TIE_OPTIMISTIC, TIE_MEAN):
		raise ValueError(f"tie must be {TIE_OPTIMISTIC!r} or {TIE_MEAN!r}, got {tie!r}")
	triple = _as_triple(test_triple)
	entities = np.asarray(list(all_entities), dtype=np.int64)
	truth = triple.head if slot == HEAD else triple.tail
	ents, cands = _candidate_pool(triple, slot, entities, known_triples if filtered else None)
	others = ents != truth
	target = float(np.asarray(scorer(np.array([triple], dtype=np.int64)))[0])
	if not others.any():
		return 1
	scores = np.asarray(scorer(cands[others]), dtype=np.float64)
	greater = int((scores > target).sum())
	if tie == TIE_OPTIMISTIC:
		return 1 + greater
	return 1 + greater + 0.5 * int((scores == target).sum())


@dataclass(frozen=True)
class RankingReport:
	mrr_head: float
	mrr_tail: float
	mrr_avg: float
	hits: dict[int, tuple[float, float, float]]
	n_test: int
	head_ranks: tuple[float, ...] = field(default=(), repr=False)
	tail_ranks: tuple[float, ...] = field(default=(), repr=False)

	@classmethod
	def from_ranks(
		cls, head_ranks: Sequence[float], tail_ranks: Sequence[float], ks: Iterable[int] = DEFAULT_KS
	) -> "RankingReport":
		head = np.asarray(head_ranks, dtype=np.float64)
		tail = np.asarray(tail_ranks, dtype=np.float64)
		if head.size == 0 or head.size != tail.size:
			raise ValueError("need the same non-zero number of head and tail ranks")
		mrr_head = float((1.0 / head).mean())
		mrr_tail = float((1.0 / tail).mean())
		hits: dict[int, tuple[float, float, float]] = {}
		for k in sorted(set(int(k) for k in ks)):
			h = float((head <= k).mean())
			t = float((tail <= k).mean())
			hits[k] = (h, t, (h + t) / 2.0)
		return cls(
			mrr_head=mrr_head,
			mrr_tail=mrr_tail,
			mrr_avg=(mrr_head + mrr_tail) / 2.0,
			hits=hits,
			n_test=int(head.size),
			head_ranks=tuple(head.tolist()),
			tail_ranks=tuple(tail.tolist()),
		)

	def to_payload(self) -> dict:
		payload = {
			"mrr_head": self.mrr_head,
			"mrr_tail": self.mrr_tail,
			"mrr_avg": self.mrr_avg,
			"n_test": self.n_test,
		}
		for k, (h, t, a) in self.hits.items():
			payload[f"hits@{k}"] = {"head": h, "tail": t, "avg": a}
		return payload


@dataclass(frozen=True)
class SemReport:
	sem: dict[int, tuple[float, float, float]]
	n_head: int
	n_tail: int

	@property
	def n_scored(self) -> int:
		return self.n_head + self.n_tail

	def to_payload(self) -> dict:
		payload: dict = {"n_scored": self.n_scored, "n_head": self.n_head, "n_tail": self.n_tail}
		for k, (h, t, a) in self.sem.items():
			payload[f"sem@{k}"] = {"head": h, "tail": t, "avg": a}
		return payload


def _check_pair(test: KnowledgeGraph, train: KnowledgeGraph) -> None:
	if test.vocab is not train.vocab:
		raise ValueError("test and train graphs must share one vocabulary")
	if len(test) == 0:
		raise ValueError("test set is empty")


def _filter_for(test: KnowledgeGraph, train: KnowledgeGraph, filter_train_only: bool) -> FilterIndex:
	return FilterIndex(train) if filter_train_only else FilterIndex(train, test)


def _map(executor: Optional[Executor], fn, items: Sequence) -> list:
	if executor is None:
		return [fn(x) for x in items]
	return list(executor.map(fn, items))


def evaluate_link_prediction(
	scorer: Scorer,
	test: KnowledgeGraph,
	train: KnowledgeGraph,
	ks: Iterable[int] = DEFAULT_KS,
	*,
	filter_train_only: bool = False,
	filtered: bool = True,
	tie: str = TIE_OPTIMISTIC,
	executor: Optional[Executor] = None,
) -> RankingReport:
	"""Filtered MRR and Hits@K over head and tail prediction for every test triple."""
	_check_pair(test, train)
	known = _filter_for(test, train, filter_train_only)
	entities = np.arange(test.vocab.n_entities, dtype=np.int64)

	def both(triple: Triple) -> tuple[float, float]:
		return (
			rank_filtered(scorer, triple, HEAD, entities, known, filtered=filtered, tie=tie),
			rank_filtered(scorer, triple, TAIL, entities, known, filtered=filtered, tie=tie),
		)

	ranks = _map(executor, both, test.triples)
	return RankingReport.from_ranks([r[0] for r in ranks], [r[1] for r in ranks], ks)


def _top_candidates(
	scorer: Scorer, triple: Triple, slot: str, entities: np.ndarray, known: Optional[FilterIndex], k: int
) -> tuple[np.ndarray, int]:
	ents, cands = _candidate_pool(triple, slot, entities, known)
	truth = triple.head if slot == HEAD else triple.tail
	scores = np.asarray(scorer(cands), dtype=np.float64)
	# Among equal scores the ground truth comes first, then ascending entity order,
	# matching the optimistic rank used by link prediction.
	order = np.lexsort((ents, ents != truth, -scores))
	return ents[order[:k]], int(ents.size)


def sem_at_ks(
	scorer: Scorer,
	test: KnowledgeGraph,
	train: KnowledgeGraph,
	types: TypeMap,
	ks: Iterable[int] = DEFAULT_KS,
	*,
	filtered: bool = True,
	filter_train_only: bool = False,
	executor: Optional[Executor] = None,
) -> SemReport:
	"""Sem@K for several K from one pass over the test triples.

	For each direction, only queries whose ground-truth entity is typed count.
	A top-K candidate scores 1 when its type equals the ground truth's type;
	untyped candidates score 0. Each query's sum is divided by K even when
	fewer than K candidates exist.
	"""
	k_list = sorted(set(int(k) for k in ks))
	if not k_list or k_list[0] < 1:
		raise ValueError(f"every k must be >= 1, got {list(ks)}")
	_check_pair(test, train)
	known = _filter_for(test, train, filter_train_only) if filtered else None
	entities = np.arange(test.vocab.n_entities, dtype=np.int64)
	k_max = k_list[-1]

	def one(triple: Triple) -> list[Optional[tuple[list[float], bool]]]:
		out: list[Optional[tuple[list[float], bool]]] = []
		for slot in (HEAD, TAIL):
			truth = triple.head if slot == HEAD else triple.tail
			truth_type = types.get(truth)
			if truth_type is None:
				out.append(None)
				continue
			top, pool = _top_candidates(scorer, triple, slot, entities, known, k_max)
			compat = np.array([types.get(int(e)) == truth_type for e in top], dtype=np.float64)
			out.append(([float(compat[:k].sum()) / k for k in k_list], pool < k_max))
		return out

	results = _map(executor, one, test.triples)
	sem: dict[int, tuple[float, float, float]] = {}
	per_slot: list[list[list[float]]] = [[], []]
	short = 0
	for row in results:
		for j, item in enumerate(row):
			if item is None:
				continue
			values, was_short = item
			per_slot[j].append(values)
			short += int(was_short)
	if short:
		print(f"⚠️ {short} Sem@K quer(ies) had fewer than K={k_max} candidates; dividing by K anyway.")
	if not per_slot[0] and not per_slot[1]:
		print("⚠️ No test triple has a typed head or tail entity; Sem@K is reported as 0.")
	for idx, k in enumerate(k_list):
		h = float(np.mean([v[idx] for v in per_slot[0]])) if per_slot[0] else 0.0
		t = float(np.mean([v[idx] for v in per_slot[1]])) if per_slot[1] else 0.0
		sem[k] = (h, t, (h + t) / 2.0)
	return SemReport(sem=sem, n_head=len(per_slot[0]), n_tail=len(per_slot[1]))


def sem_at_k(
	scorer: Scorer,
	test: KnowledgeGraph,
	train: KnowledgeGraph,
	types: TypeMap,
	k: int,
	*,
	filtered: bool = True,
	filter_train_only: bool = False,
	executor: Optional[Executor] = None,
) -> SemReport:
	if k < 1:
		raise ValueError(f"k must be >= 1, got {k}")
	return sem_at_ks(
		scorer, test, train, types, (k,), filtered=filtered, filter_train_only=filter_train_only, executor=executor
	)
