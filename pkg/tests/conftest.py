import os
import sys
from pathlib import Path
from typing import Callable, Iterable

import pytest


# Ensure project root is on sys.path so `functionality.*` imports work
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
	sys.path.insert(0, ROOT)

from functionality.dual_kge.models import KnowledgeGraph, Vocabulary  # noqa: E402


@pytest.fixture
def write_lines(tmp_path: Path) -> Callable[[str, Iterable[str]], str]:
	"""Write lines to a file under tmp_path and return its path."""

	def _write(name: str, lines: Iterable[str]) -> str:
		path = tmp_path / name
		path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
		return str(path)

	return _write


def synthetic_rows(n_entities: int = 40, n_relations: int = 4) -> tuple[list[tuple[str, str, str]], list[tuple[str, str, str]]]:
	"""Cyclic toy data: relation k links e_i to e_{i+k+1} and e_{i+k+2}; negatives jump half-way round."""
	pos = []
	for i in range(n_entities):
		for k in range(n_relations):
			pos.append((f"e{i}", f"r{k}", f"e{(i + k + 1) % n_entities}"))
			pos.append((f"e{i}", f"r{k}", f"e{(i + k + 2) % n_entities}"))
	neg = []
	for i in range(n_entities):
		for k in range(n_relations - 1):
			if len(neg) < 100:
				neg.append((f"e{i}", f"r{k}", f"e{(i + k + n_entities // 2) % n_entities}"))
	return pos, neg


@pytest.fixture
def synthetic_graphs() -> tuple[KnowledgeGraph, KnowledgeGraph]:
	"""Positive/negative graph pair over one vocabulary (40 entities, 4 relations)."""
	pos_rows, neg_rows = synthetic_rows()
	vocab = Vocabulary()

	def build(rows):
		return KnowledgeGraph.from_triples(
			vocab, [(vocab.entity_id(h), vocab.relation_id(r), vocab.entity_id(t)) for h, r, t in rows]
		)

	return build(pos_rows), build(neg_rows)


@pytest.fixture
def toy_graphs() -> tuple[KnowledgeGraph, KnowledgeGraph]:
	"""Four entities, two relations; small enough for exhaustive oracles."""
	vocab = Vocabulary(["a", "b", "c", "d"], ["r", "s"])
	pos = KnowledgeGraph.from_triples(vocab, [(0, 0, 1), (1, 0, 2), (2, 1, 3), (3, 1, 0)])
	neg = KnowledgeGraph.from_triples(vocab, [(0, 0, 3), (1, 1, 0), (2, 0, 0)])
	return pos, neg
