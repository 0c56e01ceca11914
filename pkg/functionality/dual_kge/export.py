from __future__ import annotations

"""Embedding TSV export and import.

Layout: `# kind=<name>` and `# dim=<d>` header lines, then one
`label<TAB>v1<TAB>...` row per entity followed by one per relation. Values
use the shortest decimal that round-trips, so re-importing gives bitwise
equal vectors. The `concat` selection writes entities only.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .kge_models import EmbeddingModel
from .models import Vocabulary
from .state import Checkpoint

WHICH = ("pos", "neg", "concat")


@dataclass
class EmbeddingTable:
	kind: str
	dim: int
	entities: dict[str, np.ndarray] = field(default_factory=dict)
	relations: dict[str, np.ndarray] = field(default_factory=dict)


def _row(label: str, vector: np.ndarray) -> str:
	return label + "\t" + "\t".join(repr(float(v)) for v in vector) + "\n"


def _model_for(checkpoint: Checkpoint, which: str) -> EmbeddingModel:
	models = checkpoint.models()
	if which not in models:
		raise ValueError(f"checkpoint ({checkpoint.mode}) holds no {which!r} model; available: {', '.join(models)}")
	return models[which]


def write_embeddings(path: str, checkpoint: Checkpoint, which: str = "pos") -> int:
	"""Write the selected embeddings and return the number of rows written."""
	if which not in WHICH:
		raise ValueError(f"which must be one of {', '.join(WHICH)}, got {which!r}")
	vocab: Vocabulary = checkpoint.vocab
	kind = checkpoint.kind
	if which == "concat":
		models = checkpoint.models()
		if set(models) != {"pos", "neg"}:
			raise ValueError("concat export needs a dual checkpoint")
		matrix = np.concatenate([models["pos"].entity_params, models["neg"].entity_params], axis=1)
		relation_matrix = None
		dim = models["pos"].dim
	else:
		model = _model_for(checkpoint, which)
		matrix, relation_matrix, dim = model.entity_params, model.relation_params, model.dim

	os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
	tmp = f"{path}.tmp"
	rows = 0
	with open(tmp, "w", encoding="utf-8", newline="\n") as f:
		f.write(f"# kind={kind.name}\n")
		f.write(f"# dim={dim}\n")
		for i, label in enumerate(vocab.entity_labels):
			f.write(_row(label, matrix[i]))
			rows += 1
		if relation_matrix is not None:
			for i, label in enumerate(vocab.relation_labels):
				f.write(_row(label, relation_matrix[i]))
				rows += 1
	os.replace(tmp, path)
	return rows


def read_embeddings(path: str, n_entities: int) -> EmbeddingTable:
	"""Read a file written by `write_embeddings`; the first `n_entities` rows are entities."""
	header: dict[str, str] = {}
	table_rows: list[tuple[str, np.ndarray]] = []
	with open(path, "r", encoding="utf-8") as f:
		for lineno, raw in enumerate(f, start=1):
			line = raw.rstrip("\n")
			if not line:
				continue
			if line.startswith("#"):
				key, _, value = line[1:].strip().partition("=")
				header[key.strip()] = value.strip()
				continue
			label, *values = line.split("\t")
			if not values:
				raise ValueError(f"{path}:{lineno}: row has no values")
			table_rows.append((label, np.array([float(v) for v in values], dtype=np.float64)))
	if "kind" not in header or "dim" not in header:
		raise ValueError(f"{path}: missing '# kind=' or '# dim=' header")
	if n_entities > len(table_rows):
		raise ValueError(f"{path}: expected at least {n_entities} entity rows, found {len(table_rows)}")
	return EmbeddingTable(
		kind=header["kind"],
		dim=int(header["dim"]),
		entities=dict(table_rows[:n_entities]),
		relations=dict(table_rows[n_entities:]),
	)
