from __future__ import annotations

"""Negative sample generation.

Random corruption replaces the head or the tail of each positive with another
entity of the same graph. Contrastive corruption scores every admissible
replacement with the opposing model and keeps the highest-scoring one.
"""

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kge_models import HEAD, TAIL, EmbeddingModel, score_all_corruptions
from .models import KnowledgeGraph

RANDOM = "random"
CONTRASTIVE = "contrastive"

# Positives scored per worker task in contrastive corruption.
_CHUNK = 64


class SamplingError(RuntimeError):
	"""Raised when a graph cannot yield corruptions (fewer than two entities)."""


@dataclass(frozen=True)
class NegativeSampleSet:
	"""Negatives aligned index-for-index with a graph's positives."""

	samples: np.ndarray  # (n, 3) int64
	slots: np.ndarray  # (n,) bool, True where the head was replaced
	provenance: str

	def __len__(self) -> int:
		return int(self.samples.shape[0])


def _entities(kg: KnowledgeGraph) -> np.ndarray:
	ents = np.asarray(kg.unique_entities, dtype=np.int64)
	if ents.size < 2:
		raise SamplingError(f"graph has {ents.size} unique entities; corruption needs at least 2")
	return ents


def _original_slot_entities(kg: KnowledgeGraph, head_flags: np.ndarray) -> np.ndarray:
	return np.where(head_flags, kg.array[:, 0], kg.array[:, 2])


def _replace(kg: KnowledgeGraph, head_flags: np.ndarray, replacement: np.ndarray) -> np.ndarray:
	out = kg.array.copy()
	out[head_flags, 0] = replacement[head_flags]
	out[~head_flags, 2] = replacement[~head_flags]
	return out


def random_corrupt(kg: KnowledgeGraph, rng: np.random.Generator) -> NegativeSampleSet:
	"""Replace a fair-coin-chosen slot with a uniformly drawn other entity."""
	ents = _entities(kg)
	n = len(kg)
	head_flags = rng.random(n) < 0.5
	draws = rng.integers(0, ents.size - 1, size=n)
	original = _original_slot_entities(kg, head_flags)
	# Skip over the original's position so every other entity is equally likely.
	orig_pos = np.searchsorted(ents, original)
	draws = draws + (draws >= orig_pos)
	return NegativeSampleSet(_replace(kg, head_flags, ents[draws]), head_flags, RANDOM)


def _best_for_chunk(
	kg: KnowledgeGraph,
	model: EmbeddingModel,
	rows: range,
	head_flags: np.ndarray,
	pools: list[np.ndarray],
) -> list[int]:
	best: list[int] = []
	for i in rows:
		slot = HEAD if head_flags[i] else TAIL
		cands = pools[i]
		scores = score_all_corruptions(model, kg.triples[i], slot, cands)
		# np.argmax keeps the first maximum; pools are sorted, so ties go to the smallest index.
		best.append(int(cands[int(np.argmax(scores))]))
	return best


def contrastive_corrupt(
	kg: KnowledgeGraph,
	contr_model: EmbeddingModel,
	rng: np.random.Generator,
	pool_size: Optional[int] = None,
	*,
	executor: Optional[Executor] = None,
) -> NegativeSampleSet:
	"""Pick, per positive, the corruption the opposing model scores highest.

	`pool_size=None` scores every other entity of the graph. A smaller pool is
	drawn uniformly without replacement from the admissible entities; a pool at
	least as large as the admissible set behaves exactly like `None` and draws
	nothing from `rng`.
	"""
	if contr_model.n_entities < kg.vocab.n_entities or contr_model.n_relations < kg.vocab.n_relations:
		raise ValueError(
			"contrastive model does not cover the graph vocabulary "
			f"({contr_model.n_entities}x{contr_model.n_relations} vs {kg.vocab.n_entities}x{kg.vocab.n_relations})"
		)
	if pool_size is not None and pool_size < 1:
		raise ValueError(f"pool_size must be >= 1 or None, got {pool_size}")
	ents = _entities(kg)
	n = len(kg)
	head_flags = rng.random(n) < 0.5
	original = _original_slot_entities(kg, head_flags)
	subsample = pool_size is not None and pool_size < ents.size - 1

	pools: list[np.ndarray] = []
	for i in range(n):
		admissible = ents[ents != original[i]]
		if subsample:
			picked = rng.choice(admissible.size, size=pool_size, replace=False)
			admissible = admissible[np.sort(picked)]
		pools.append(admissible)

	chunks = [range(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
	if executor is None:
		parts = [_best_for_chunk(kg, contr_model, c, head_flags, pools) for c in chunks]
	else:
		parts = list(executor.map(lambda c: _best_for_chunk(kg, contr_model, c, head_flags, pools), chunks))
	replacement = np.array([e for part in parts for e in part], dtype=np.int64).reshape(n)
	return NegativeSampleSet(_replace(kg, head_flags, replacement), head_flags, CONTRASTIVE)
