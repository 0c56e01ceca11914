from pathlib import Path

import numpy as np
import pytest

from functionality.dual_kge.export import read_embeddings, write_embeddings
from functionality.dual_kge.kge_models import ModelKind
from functionality.dual_kge.state import MODE_BASELINE_POS, MODE_DUAL, Checkpoint
from functionality.dual_kge.trainer import TrainConfig, train_dual, train_single


@pytest.fixture
def dual_checkpoint(toy_graphs) -> Checkpoint:
	pos, neg = toy_graphs
	cfg = TrainConfig(kind=ModelKind("complex"), epochs=2, cl_phase=1, dim=3, n_batches=1)
	return Checkpoint(mode=MODE_DUAL, vocab=pos.vocab, state=train_dual(pos, neg, cfg), config={})


def test_export_reimports_bitwise(tmp_path: Path, dual_checkpoint):
	path = str(tmp_path / "emb" / "pos.tsv")
	rows = write_embeddings(path, dual_checkpoint, "pos")
	assert rows == 4 + 2
	lines = Path(path).read_text(encoding="utf-8").splitlines()
	assert lines[:2] == ["# kind=complex", "# dim=3"]
	table = read_embeddings(path, n_entities=4)
	assert table.kind == "complex" and table.dim == 3
	model = dual_checkpoint.models()["pos"]
	for i, label in enumerate(dual_checkpoint.vocab.entity_labels):
		assert np.array_equal(table.entities[label], model.entity_params[i])
	for i, label in enumerate(dual_checkpoint.vocab.relation_labels):
		assert np.array_equal(table.relations[label], model.relation_params[i])


def test_concat_export_has_entities_only(tmp_path: Path, dual_checkpoint):
	path = str(tmp_path / "concat.tsv")
	assert write_embeddings(path, dual_checkpoint, "concat") == 4
	table = read_embeddings(path, n_entities=4)
	assert table.relations == {}
	# complex width 6 per model
	assert all(v.shape == (12,) for v in table.entities.values())
	pos, neg = dual_checkpoint.models()["pos"], dual_checkpoint.models()["neg"]
	assert np.array_equal(table.entities["a"], np.concatenate([pos.entity_params[0], neg.entity_params[0]]))


def test_export_selection_errors(tmp_path: Path, toy_graphs, dual_checkpoint):
	with pytest.raises(ValueError):
		write_embeddings(str(tmp_path / "x.tsv"), dual_checkpoint, "both")
	pos, _ = toy_graphs
	single = train_single(pos, TrainConfig(epochs=1, cl_phase=1, dim=2))
	baseline = Checkpoint(mode=MODE_BASELINE_POS, vocab=pos.vocab, state=single, config={})
	assert write_embeddings(str(tmp_path / "b.tsv"), baseline, "pos") == 6
	with pytest.raises(ValueError):
		write_embeddings(str(tmp_path / "n.tsv"), baseline, "neg")
	with pytest.raises(ValueError):
		write_embeddings(str(tmp_path / "c.tsv"), baseline, "concat")


def test_read_embeddings_rejects_headerless_file(tmp_path: Path):
	path = tmp_path / "raw.tsv"
	path.write_text("a\t1.0\t2.0\n", encoding="utf-8")
	with pytest.raises(ValueError, match="header"):
		read_embeddings(str(path), n_entities=1)
