from __future__ import annotations

"""Data records shared by every part of the toolkit.

Vocabularies, triples, knowledge graphs, type maps and labelled entity pairs.
Graphs are immutable once built; vocabularies grow while files are parsed and
can be frozen afterwards so later files cannot introduce new labels.
"""

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np


class Triple(NamedTuple):
	"""Integer-indexed (head, relation, tail) fact."""
	head: int
	relation: int
	tail: int


@dataclass
class Vocabulary:
	"""Label <-> dense index bijections for entities and relations."""

	entity_labels: list[str] = field(default_factory=list)
	relation_labels: list[str] = field(default_factory=list)
	frozen: bool = False
	_entity_index: dict[str, int] = field(default_factory=dict, repr=False)
	_relation_index: dict[str, int] = field(default_factory=dict, repr=False)

	def __post_init__(self) -> None:
		self._entity_index = {label: i for i, label in enumerate(self.entity_labels)}
		self._relation_index = {label: i for i, label in enumerate(self.relation_labels)}
		if len(self._entity_index) != len(self.entity_labels):
			raise ValueError("duplicate entity labels in vocabulary")
		if len(self._relation_index) != len(self.relation_labels):
			raise ValueError("duplicate relation labels in vocabulary")

	@property
	def n_entities(self) -> int:
		return len(self.entity_labels)

	@property
	def n_relations(self) -> int:
		return len(self.relation_labels)

	def freeze(self) -> "Vocabulary":
		self.frozen = True
		return self

	def entity_id(self, label: str, *, add: bool = True) -> Optional[int]:
		"""Return the index for an entity label, appending it when unseen."""
		idx = self._entity_index.get(label)
		if idx is None and add and not self.frozen:
			idx = len(self.entity_labels)
			self.entity_labels.append(label)
			self._entity_index[label] = idx
		return idx

	def relation_id(self, label: str, *, add: bool = True) -> Optional[int]:
		"""Return the index for a relation label, appending it when unseen."""
		idx = self._relation_index.get(label)
		if idx is None and add and not self.frozen:
			idx = len(self.relation_labels)
			self.relation_labels.append(label)
			self._relation_index[label] = idx
		return idx

	def entity_label(self, idx: int) -> str:
		return self.entity_labels[idx]

	def relation_label(self, idx: int) -> str:
		return self.relation_labels[idx]


@dataclass(frozen=True)
class KnowledgeGraph:
	"""Ordered, duplicate-free triple list over a shared vocabulary."""

	vocab: Vocabulary
	triples: tuple[Triple, ...]
	triple_set: frozenset[Triple] = field(repr=False)
	unique_entities: tuple[int, ...] = field(repr=False)
	array: np.ndarray = field(repr=False, compare=False)

	@classmethod
	def from_triples(cls, vocab: Vocabulary, triples: Iterable[tuple[int, int, int]]) -> "KnowledgeGraph":
		"""Build a graph keeping first occurrences in order and dropping duplicates."""
		seen: set[Triple] = set()
		ordered: list[Triple] = []
		for item in triples:
			t = Triple(int(item[0]), int(item[1]), int(item[2]))
			if t.head >= vocab.n_entities or t.tail >= vocab.n_entities or t.relation >= vocab.n_relations:
				raise ValueError(f"triple {tuple(t)} is outside the vocabulary")
			if min(t) < 0:
				raise ValueError(f"triple {tuple(t)} has a negative index")
			if t in seen:
				continue
			seen.add(t)
			ordered.append(t)
		entities = sorted({t.head for t in ordered} | {t.tail for t in ordered})
		arr = np.array(ordered, dtype=np.int64).reshape(len(ordered), 3)
		arr.setflags(write=False)
		return cls(
			vocab=vocab,
			triples=tuple(ordered),
			triple_set=frozenset(seen),
			unique_entities=tuple(entities),
			array=arr,
		)

	def __len__(self) -> int:
		return len(self.triples)

	def __contains__(self, item: object) -> bool:
		return item in self.triple_set

	def subgraph(self, keep: Iterable[Triple]) -> "KnowledgeGraph":
		"""Return the graph restricted to `keep`, preserving this graph's order."""
		wanted = set(keep)
		return KnowledgeGraph.from_triples(self.vocab, [t for t in self.triples if t in wanted])

	@property
	def relations(self) -> tuple[int, ...]:
		return tuple(sorted({t.relation for t in self.triples}))


@dataclass(frozen=True)
class TypeMap:
	"""Partial entity -> type label mapping."""

	mapping: dict[int, str] = field(default_factory=dict)

	def get(self, entity: int) -> Optional[str]:
		return self.mapping.get(entity)

	def __len__(self) -> int:
		return len(self.mapping)

	def __contains__(self, entity: object) -> bool:
		return entity in self.mapping

	@property
	def labels(self) -> list[str]:
		return sorted(set(self.mapping.values()))


@dataclass(frozen=True, slots=True)
class PairExample:
	"""Labelled entity pair for triple classification."""
	e1: int
	e2: int
	label: int
