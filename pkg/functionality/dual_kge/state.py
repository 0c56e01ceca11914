from __future__ import annotations

"""Checkpoint persistence for training runs.

A checkpoint is one JSON document holding both parameter matrices (or the
single baseline model), the epoch reached, the numpy generator state and the
vocabulary, so a run can be evaluated, exported or resumed later. Floats are
written with their shortest round-trip representation.
"""

import csv
import json
import os
from dataclasses import dataclass
from threading import Lock
from typing import Any, Iterable, Optional, Union

import numpy as np

_CHECKPOINT_LOCK = Lock()

from .kge_models import EmbeddingModel, ModelKind
from .models import Vocabulary
from .sampling import CONTRASTIVE, NegativeSampleSet
from .trainer import DualModelState, EpochRecord, SingleModelState

SCHEMA_VERSION = 1
MODE_DUAL = "dual"
MODE_BASELINE_POS = "baseline-pos"
MODE_BASELINE_NEG = "baseline-neg"
MODES = (MODE_DUAL, MODE_BASELINE_POS, MODE_BASELINE_NEG)

TrainState = Union[DualModelState, SingleModelState]


class CheckpointError(ValueError):
	"""Raised when a checkpoint is missing, unreadable or inconsistent."""


@dataclass
class Checkpoint:
	mode: str
	vocab: Vocabulary
	state: TrainState
	config: dict[str, Any]

	@property
	def kind(self) -> ModelKind:
		return next(iter(self.models().values())).kind

	@property
	def epoch(self) -> int:
		return self.state.epoch

	def models(self) -> dict[str, EmbeddingModel]:
		"""Trained models keyed by the graph they were trained on."""
		if isinstance(self.state, DualModelState):
			return {"pos": self.state.pos_model, "neg": self.state.neg_model}
		return {self.state.side: self.state.model}


def _matrix(value: Optional[np.ndarray]) -> Optional[list]:
	return None if value is None else value.tolist()


def _encode_model(model: EmbeddingModel) -> dict[str, Any]:
	return {
		"entity": _matrix(model.entity_params),
		"relation": _matrix(model.relation_params),
		"entity_accum": _matrix(model.entity_accum),
		"relation_accum": _matrix(model.relation_accum),
	}


def _decode_matrix(raw: Any, rows: int, width: int, name: str) -> np.ndarray:
	arr = np.asarray(raw, dtype=np.float64)
	if arr.size == 0 and rows * width == 0:
		return arr.reshape(rows, width)
	if arr.shape != (rows, width):
		raise CheckpointError(f"{name} has shape {arr.shape}, expected {(rows, width)}")
	return arr


def _decode_model(raw: dict[str, Any], kind: ModelKind, dim: int, vocab: Vocabulary, name: str) -> EmbeddingModel:
	width = kind.width(dim)
	ent_accum = raw.get("entity_accum")
	rel_accum = raw.get("relation_accum")
	return EmbeddingModel(
		kind=kind,
		dim=dim,
		entity_params=_decode_matrix(raw["entity"], vocab.n_entities, width, f"{name}.entity"),
		relation_params=_decode_matrix(raw["relation"], vocab.n_relations, width, f"{name}.relation"),
		entity_accum=None if ent_accum is None else _decode_matrix(ent_accum, vocab.n_entities, width, f"{name}.entity_accum"),
		relation_accum=None if rel_accum is None else _decode_matrix(rel_accum, vocab.n_relations, width, f"{name}.relation_accum"),
	)


def _encode_cache(cache: Optional[tuple[NegativeSampleSet, NegativeSampleSet]]) -> Optional[dict[str, Any]]:
	if cache is None:
		return None
	return {name: {"samples": s.samples.tolist(), "slots": s.slots.tolist()} for name, s in zip(("pos", "neg"), cache)}


def _decode_cache(raw: Any) -> Optional[tuple[NegativeSampleSet, NegativeSampleSet]]:
	if raw is None:
		return None
	sets = []
	for name in ("pos", "neg"):
		samples = np.asarray(raw[name]["samples"], dtype=np.int64).reshape(-1, 3)
		slots = np.asarray(raw[name]["slots"], dtype=bool)
		if samples.shape[0] != slots.shape[0]:
			raise CheckpointError(f"contrastive_cache.{name} has {samples.shape[0]} samples but {slots.shape[0]} slots")
		sets.append(NegativeSampleSet(samples=samples, slots=slots, provenance=CONTRASTIVE))
	return sets[0], sets[1]


def encode_checkpoint(checkpoint: Checkpoint) -> dict[str, Any]:
	"""JSON-ready payload of a checkpoint."""
	kind = checkpoint.kind
	first = next(iter(checkpoint.models().values()))
	payload: dict[str, Any] = {
		"schema_version": SCHEMA_VERSION,
		"mode": checkpoint.mode,
		"kind": kind.name,
		"p": kind.p,
		"conjugate": kind.conjugate,
		"dim": first.dim,
		"epoch": checkpoint.state.epoch,
		"rng_state": checkpoint.state.rng.bit_generator.state,
		"entities": list(checkpoint.vocab.entity_labels),
		"relations": list(checkpoint.vocab.relation_labels),
		"models": {name: _encode_model(m) for name, m in checkpoint.models().items()},
		"config": checkpoint.config,
	}
	if isinstance(checkpoint.state, DualModelState) and checkpoint.state.contrastive_cache is not None:
		payload["contrastive_cache"] = _encode_cache(checkpoint.state.contrastive_cache)
	return payload


def decode_checkpoint(payload: dict[str, Any]) -> Checkpoint:
	"""Rebuild a checkpoint from its JSON payload; shape problems raise CheckpointError."""
	try:
		if payload.get("schema_version") != SCHEMA_VERSION:
			raise CheckpointError(f"unsupported checkpoint schema_version {payload.get('schema_version')!r}")
		mode = payload["mode"]
		if mode not in MODES:
			raise CheckpointError(f"unknown checkpoint mode {mode!r}")
		kind = ModelKind.parse(payload["kind"], p=payload.get("p", 1), conjugate=payload.get("conjugate", True))
		dim = int(payload["dim"])
		vocab = Vocabulary(list(payload["entities"]), list(payload["relations"])).freeze()
		rng = np.random.default_rng()
		rng.bit_generator.state = payload["rng_state"]
		raw_models = payload["models"]
		epoch = int(payload["epoch"])
		if mode == MODE_DUAL:
			state: TrainState = DualModelState(
				pos_model=_decode_model(raw_models["pos"], kind, dim, vocab, "pos"),
				neg_model=_decode_model(raw_models["neg"], kind, dim, vocab, "neg"),
				epoch=epoch,
				rng=rng,
				contrastive_cache=_decode_cache(payload.get("contrastive_cache")),
			)
		else:
			side = "pos" if mode == MODE_BASELINE_POS else "neg"
			state = SingleModelState(
				model=_decode_model(raw_models[side], kind, dim, vocab, side),
				side=side,
				epoch=epoch,
				rng=rng,
			)
		return Checkpoint(mode=mode, vocab=vocab, state=state, config=dict(payload.get("config") or {}))
	except CheckpointError:
		raise
	except (KeyError, TypeError, ValueError) as exc:
		raise CheckpointError(f"malformed checkpoint: {exc}") from exc


class CheckpointStore:
	"""JSON-backed store for one training checkpoint."""

	def __init__(self, path: str = "runs/checkpoint.json") -> None:
		self.path = path

	def load(self) -> Checkpoint:
		"""Load the checkpoint; a missing or corrupt file raises CheckpointError."""
		try:
			with open(self.path, "r", encoding="utf-8") as f:
				data = json.load(f)
		except FileNotFoundError as exc:
			raise CheckpointError(f"checkpoint not found: {self.path}") from exc
		except json.JSONDecodeError as exc:
			raise CheckpointError(f"checkpoint {self.path} is not valid JSON: {exc}") from exc
		if not isinstance(data, dict):
			raise CheckpointError(f"checkpoint {self.path} does not hold a JSON object")
		return decode_checkpoint(data)

	def _atomic_write(self, payload: str) -> None:
		"""Atomically write JSON payload to the configured path."""
		dirname = os.path.dirname(self.path) or "."
		os.makedirs(dirname, exist_ok=True)
		tmp = f"{self.path}.tmp"
		with open(tmp, "w", encoding="utf-8") as f:
			f.write(payload)
		os.replace(tmp, self.path)

	def save(self, checkpoint: Checkpoint) -> None:
		"""Write the checkpoint to disk (atomic, synchronized)."""
		payload = json.dumps(encode_checkpoint(checkpoint), separators=(",", ":"), ensure_ascii=False)
		with _CHECKPOINT_LOCK:
			self._atomic_write(payload)


def _cell(value: Optional[float]) -> str:
	return "" if value is None else repr(float(value))


def write_loss_csv(path: str, records: Iterable[EpochRecord]) -> None:
	"""Write the full `epoch,loss_pos,loss_neg` history (atomic)."""
	os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
	tmp = f"{path}.tmp"
	with open(tmp, "w", encoding="utf-8", newline="") as f:
		writer = csv.writer(f, lineterminator="\n")
		writer.writerow(["epoch", "loss_pos", "loss_neg"])
		for rec in records:
			writer.writerow([rec.epoch, _cell(rec.loss_pos), _cell(rec.loss_neg)])
	os.replace(tmp, path)


def read_loss_csv(path: str) -> list[EpochRecord]:
	"""Loss history written by `write_loss_csv`; provenance is not stored and comes back empty."""
	with open(path, "r", encoding="utf-8", newline="") as f:
		rows = list(csv.DictReader(f))
	return [
		EpochRecord(
			epoch=int(r["epoch"]),
			loss_pos=float(r["loss_pos"]) if r["loss_pos"] else None,
			loss_neg=float(r["loss_neg"]) if r["loss_neg"] else None,
			provenance="",
		)
		for r in rows
	]
