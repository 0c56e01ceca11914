from __future__ import annotations

"""Triple-file ingestion and dataset construction.

Reads tab-separated triple and type-map files into index-based graphs over a
shared vocabulary, filters positives down to (head, relation) pairs that also
carry negative statements, and splits train/test so that every test entity and
relation still occurs in training.
"""

import math
import os
from typing import Iterator

import numpy as np

from .models import KnowledgeGraph, PairExample, TypeMap, Vocabulary


class ParseError(ValueError):
	"""Raised when an input file has a malformed or conflicting line."""


def _iter_data_lines(path: str) -> Iterator[tuple[int, str]]:
	"""Yield (line_number, line) for non-empty, non-comment lines."""
	with open(path, "r", encoding="utf-8") as fh:
		for lineno, raw in enumerate(fh, start=1):
			line = raw.rstrip("\r\n")
			if not line.strip() or line.lstrip().startswith("#"):
				continue
			yield lineno, line


def _split_fields(path: str, lineno: int, line: str, expected: int) -> list[str]:
	parts = [p.strip() for p in line.split("\t")]
	if len(parts) != expected or any(not p for p in parts):
		raise ParseError(f"{path}:{lineno}: expected {expected} tab-separated fields, got {len(parts)}")
	return parts


def parse_triples(path: str, vocab: Vocabulary) -> KnowledgeGraph:
	"""Parse a `head<TAB>relation<TAB>tail` file into a graph over `vocab`.

	Unseen labels are appended to the vocabulary unless it is frozen, in which
	case they are a parse error. Nothing is added when any line fails.
	"""
	labelled = [(lineno, _split_fields(path, lineno, line, 3)) for lineno, line in _iter_data_lines(path)]
	for lineno, (h_label, r_label, t_label) in labelled:
		lookups = (
			(h_label, vocab.entity_id(h_label, add=False)),
			(r_label, vocab.relation_id(r_label, add=False)),
			(t_label, vocab.entity_id(t_label, add=False)),
		)
		unknown = [lbl for lbl, idx in lookups if idx is None]
		if unknown and vocab.frozen:
			raise ParseError(f"{path}:{lineno}: unknown label(s) {', '.join(map(repr, unknown))}")
	rows = [
		(vocab.entity_id(h_label), vocab.relation_id(r_label), vocab.entity_id(t_label))
		for _, (h_label, r_label, t_label) in labelled
	]
	return KnowledgeGraph.from_triples(vocab, rows)


def write_triples(path: str, kg: KnowledgeGraph) -> None:
	"""Write a graph back to TSV using its vocabulary labels."""
	os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
	tmp = f"{path}.tmp"
	with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
		for t in kg.triples:
			fh.write(
				f"{kg.vocab.entity_label(t.head)}\t{kg.vocab.relation_label(t.relation)}\t{kg.vocab.entity_label(t.tail)}\n"
			)
	os.replace(tmp, path)


def build_dataset_filter(pos: KnowledgeGraph, neg: KnowledgeGraph) -> KnowledgeGraph:
	"""Keep the positives (h, r, t) whose (h, r) occurs in some negative statement."""
	if pos.vocab is not neg.vocab:
		raise ValueError("positive and negative graphs must share one vocabulary")
	neg_pairs = {(t.head, t.relation) for t in neg.triples}
	return pos.subgraph(t for t in pos.triples if (t.head, t.relation) in neg_pairs)


def split_train_test(kg: KnowledgeGraph, test_fraction: float, seed: int) -> tuple[KnowledgeGraph, KnowledgeGraph]:
	"""Split positives so that nothing in test is exclusive to test.

	Triples are visited in a seed-shuffled order and moved to test only while
	every entity and the relation they mention keep at least one occurrence
	in train. Both halves keep the input graph's order.
	"""
	if not (0.0 < test_fraction < 1.0):
		raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
	if len(kg) == 0:
		raise ValueError("cannot split an empty graph")

	limit = math.ceil(test_fraction * len(kg))
	entity_count: dict[int, int] = {}
	relation_count: dict[int, int] = {}
	for t in kg.triples:
		for e in {t.head, t.tail}:
			entity_count[e] = entity_count.get(e, 0) + 1
		relation_count[t.relation] = relation_count.get(t.relation, 0) + 1

	rng = np.random.default_rng(seed)
	order = rng.permutation(len(kg))
	test_idx: set[int] = set()
	for i in order:
		if len(test_idx) >= limit:
			break
		t = kg.triples[int(i)]
		mentioned = {t.head, t.tail}
		if relation_count[t.relation] < 2 or any(entity_count[e] < 2 for e in mentioned):
			continue
		relation_count[t.relation] -= 1
		for e in mentioned:
			entity_count[e] -= 1
		test_idx.add(int(i))

	train = [t for i, t in enumerate(kg.triples) if i not in test_idx]
	test = [t for i, t in enumerate(kg.triples) if i in test_idx]
	return KnowledgeGraph.from_triples(kg.vocab, train), KnowledgeGraph.from_triples(kg.vocab, test)


def parse_type_map(path: str, vocab: Vocabulary) -> TypeMap:
	"""Parse `entity<TAB>type` lines; unknown entities are skipped with a warning."""
	mapping: dict[int, str] = {}
	skipped = 0
	for lineno, line in _iter_data_lines(path):
		label, type_label = _split_fields(path, lineno, line, 2)
		idx = vocab.entity_id(label, add=False)
		if idx is None:
			skipped += 1
			continue
		current = mapping.get(idx)
		if current is not None and current != type_label:
			raise ParseError(
				f"{path}:{lineno}: entity {label!r} has conflicting types {current!r} and {type_label!r}"
			)
		mapping[idx] = type_label
	if skipped:
		print(f"⚠️ Skipped {skipped} type-map line(s) naming entities outside the vocabulary.")
	return TypeMap(mapping)


def parse_pairs(path: str, vocab: Vocabulary) -> list[PairExample]:
	"""Parse an `entity1<TAB>entity2<TAB>label` file of labelled pairs."""
	pairs: list[PairExample] = []
	for lineno, line in _iter_data_lines(path):
		a, b, raw_label = _split_fields(path, lineno, line, 3)
		if raw_label not in ("0", "1"):
			raise ParseError(f"{path}:{lineno}: label must be 0 or 1, got {raw_label!r}")
		e1 = vocab.entity_id(a, add=False)
		e2 = vocab.entity_id(b, add=False)
		if e1 is None or e2 is None:
			missing = a if e1 is None else b
			raise ParseError(f"{path}:{lineno}: unknown entity {missing!r}")
		pairs.append(PairExample(e1, e2, int(raw_label)))
	return pairs


def load_graph_pair(pos_path: str, neg_path: str) -> tuple[KnowledgeGraph, KnowledgeGraph]:
	"""Parse a positive and a negative file into graphs over one vocabulary."""
	vocab = Vocabulary()
	pos = parse_triples(pos_path, vocab)
	neg = parse_triples(neg_path, vocab)
	return pos, neg
