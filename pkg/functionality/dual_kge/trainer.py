from __future__ import annotations

"""Dual-model training loop.

A positive-graph model and a negative-graph model are trained in lockstep.
Up to and including epoch `cl_phase` both use random corruption; afterwards
each model's negatives are the corruptions the *other* model scores highest.
Sampling for an epoch happens before either model steps, so both read the
other's parameters as they stood at the end of the previous epoch.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from tqdm import tqdm

from .kge_models import EmbeddingModel, ModelKind, SparseGrad, grad_rows, init_model, score_rows
from .models import KnowledgeGraph
from .sampling import CONTRASTIVE, RANDOM, NegativeSampleSet, contrastive_corrupt, random_corrupt

SGD = "sgd"
ADAGRAD = "adagrad"
ADAGRAD_EPS = 1e-8

# Per-kind defaults: (optimizer, learning rate).
_KIND_DEFAULTS = {
	"transe": (SGD, 0.01),
	"distmult": (ADAGRAD, 0.1),
	"complex": (ADAGRAD, 0.1),
}


@dataclass
class TrainConfig:
	"""Every hyperparameter of a training run.

	`optimizer` and `learning_rate` left as None resolve to the per-kind
	defaults (SGD/0.01 for TransE, Adagrad/0.1 for DistMult and ComplEx).
	"""

	kind: ModelKind = field(default_factory=lambda: ModelKind("transe"))
	epochs: int = 400
	n_batches: int = 100
	neg_rate: int = 1
	cl_phase: int = 350
	dim: int = 50
	learning_rate: Optional[float] = None
	margin: float = 1.0
	reg_lambda: float = 1e-5
	optimizer: Optional[str] = None
	seed: int = 0
	pool_size: Optional[int] = None
	regen_interval: int = 1
	normalize_entities: bool = False
	threads: int = 1

	def __post_init__(self) -> None:
		default_opt, default_lr = _KIND_DEFAULTS[self.kind.name]
		if self.optimizer is None:
			self.optimizer = default_opt
		if self.learning_rate is None:
			self.learning_rate = default_lr
		self.validate()

	def validate(self) -> None:
		if self.epochs < 0:
			raise ValueError(f"epochs must be >= 0, got {self.epochs}")
		if not (0 <= self.cl_phase <= self.epochs):
			raise ValueError(f"cl_phase must lie in [0, epochs={self.epochs}], got {self.cl_phase}")
		if self.n_batches < 1:
			raise ValueError(f"n_batches must be >= 1, got {self.n_batches}")
		if self.dim < 1:
			raise ValueError(f"dim must be >= 1, got {self.dim}")
		if self.neg_rate != 1:
			raise ValueError(f"only an entity negative rate of 1 is supported, got {self.neg_rate}")
		if not (self.learning_rate and self.learning_rate > 0):
			raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
		if self.margin <= 0:
			raise ValueError(f"margin must be positive, got {self.margin}")
		if self.reg_lambda < 0:
			raise ValueError(f"reg_lambda must be non-negative, got {self.reg_lambda}")
		if self.optimizer not in (SGD, ADAGRAD):
			raise ValueError(f"optimizer must be {SGD!r} or {ADAGRAD!r}, got {self.optimizer!r}")
		if self.pool_size is not None and self.pool_size < 1:
			raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
		if self.regen_interval < 1:
			raise ValueError(f"regen_interval must be >= 1, got {self.regen_interval}")
		if self.threads < 1:
			raise ValueError(f"threads must be >= 1, got {self.threads}")

	def to_payload(self) -> dict:
		return {
			"kind": self.kind.name,
			"p": self.kind.p,
			"conjugate": self.kind.conjugate,
			"epochs": self.epochs,
			"n_batches": self.n_batches,
			"neg_rate": self.neg_rate,
			"cl_phase": self.cl_phase,
			"dim": self.dim,
			"learning_rate": self.learning_rate,
			"margin": self.margin,
			"reg_lambda": self.reg_lambda,
			"optimizer": self.optimizer,
			"seed": self.seed,
			"pool_size": self.pool_size,
			"regen_interval": self.regen_interval,
			"normalize_entities": self.normalize_entities,
		}


@dataclass(frozen=True)
class EpochRecord:
	"""Summed losses and negative-sample provenance of one epoch."""
	epoch: int
	loss_pos: Optional[float]
	loss_neg: Optional[float]
	provenance: str


@dataclass
class DualModelState:
	pos_model: EmbeddingModel
	neg_model: EmbeddingModel
	epoch: int
	rng: np.random.Generator
	loss_history: list[EpochRecord] = field(default_factory=list)
	# Contrastive sets still in use when regen_interval > 1; restored on resume.
	contrastive_cache: Optional[tuple[NegativeSampleSet, NegativeSampleSet]] = field(default=None, repr=False)


@dataclass
class SingleModelState:
	"""Training state of a baseline trained on one graph."""
	model: EmbeddingModel
	side: str
	epoch: int
	rng: np.random.Generator
	loss_history: list[EpochRecord] = field(default_factory=list)


# ---------------------------------------------------------------------- #
# Loss and updates
# ---------------------------------------------------------------------- #

def _softplus(x: np.ndarray) -> np.ndarray:
	return np.logaddexp(0.0, x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
	return np.exp(-np.logaddexp(0.0, -x))


def loss_and_grads(
	model: EmbeddingModel, positives: np.ndarray, negatives: np.ndarray, cfg: TrainConfig
) -> tuple[float, SparseGrad]:
	"""Summed batch loss and its exact gradient.

	TransE uses the margin ranking loss sum(max(0, margin + f(neg) - f(pos))).
	DistMult and ComplEx use sum(softplus(-f(pos)) + softplus(f(neg))) plus
	reg_lambda times the squared norms of every row each triple touches.
	"""
	pos = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
	neg = np.asarray(negatives, dtype=np.int64).reshape(-1, 3)
	if pos.shape != neg.shape:
		raise ValueError(f"misaligned batches: {pos.shape[0]} positives vs {neg.shape[0]} negatives")
	E, R = model.entity_params, model.relation_params
	kind, dim = model.kind, model.dim

	ph, pr, pt = E[pos[:, 0]], R[pos[:, 1]], E[pos[:, 2]]
	nh, nr, nt = E[neg[:, 0]], R[neg[:, 1]], E[neg[:, 2]]
	s_pos = score_rows(kind, dim, ph, pr, pt)
	s_neg = score_rows(kind, dim, nh, nr, nt)
	gph, gpr, gpt = grad_rows(kind, dim, ph, pr, pt)
	gnh, gnr, gnt = grad_rows(kind, dim, nh, nr, nt)

	if kind.name == "transe":
		hinge = cfg.margin + s_neg - s_pos
		active = (hinge > 0.0).astype(np.float64)[:, None]
		loss = float(np.maximum(hinge, 0.0).sum())
		c_pos = -active
		c_neg = active
		reg = 0.0
	else:
		loss = float(_softplus(-s_pos).sum() + _softplus(s_neg).sum())
		c_pos = -_sigmoid(-s_pos)[:, None]
		c_neg = _sigmoid(s_neg)[:, None]
		reg = cfg.reg_lambda

	ent_rows = [c_pos * gph, c_pos * gpt, c_neg * gnh, c_neg * gnt]
	rel_rows = [c_pos * gpr, c_neg * gnr]
	if reg > 0.0:
		loss += reg * float(sum((x * x).sum() for x in (ph, pr, pt, nh, nr, nt)))
		ent_rows = [g + 2.0 * reg * x for g, x in zip(ent_rows, (ph, pt, nh, nt))]
		rel_rows = [g + 2.0 * reg * x for g, x in zip(rel_rows, (pr, nr))]

	grads = SparseGrad.build(
		np.concatenate([pos[:, 0], pos[:, 2], neg[:, 0], neg[:, 2]]),
		np.concatenate(ent_rows, axis=0),
		np.concatenate([pos[:, 1], neg[:, 1]]),
		np.concatenate(rel_rows, axis=0),
	)
	return loss, grads


def apply_update(model: EmbeddingModel, grads: SparseGrad, cfg: TrainConfig) -> None:
	"""Apply one SGD or Adagrad step to the rows present in `grads`."""
	lr = float(cfg.learning_rate)
	targets = (
		(model.entity_params, "entity_accum", grads.entity_ids, grads.entity_rows),
		(model.relation_params, "relation_accum", grads.relation_ids, grads.relation_rows),
	)
	if cfg.optimizer == ADAGRAD:
		model.ensure_accumulators()
	for params, accum_name, ids, rows in targets:
		if ids.size == 0:
			continue
		if cfg.optimizer == SGD:
			params[ids] -= lr * rows
		else:
			accum = getattr(model, accum_name)
			accum[ids] += rows * rows
			params[ids] -= lr * rows / np.sqrt(accum[ids] + ADAGRAD_EPS)


def _normalize_rows(model: EmbeddingModel) -> None:
	norms = np.linalg.norm(model.entity_params, axis=1, keepdims=True)
	np.divide(model.entity_params, norms, out=model.entity_params, where=norms > 1.0)


def _train_pass(
	model: EmbeddingModel, kg: KnowledgeGraph, negatives: NegativeSampleSet, order: np.ndarray, cfg: TrainConfig
) -> float:
	"""One epoch over `kg` in `order`, split into cfg.n_batches mini-batches."""
	n = len(kg)
	batch_size = math.ceil(n / cfg.n_batches)
	total = 0.0
	for start in range(0, n, batch_size):
		idx = order[start : start + batch_size]
		loss, grads = loss_and_grads(model, kg.array[idx], negatives.samples[idx], cfg)
		apply_update(model, grads, cfg)
		total += loss
	if cfg.normalize_entities and model.kind.name == "transe":
		_normalize_rows(model)
	if not model.is_finite():
		raise FloatingPointError("non-finite parameters after a training pass; lower the learning rate")
	return total


# ---------------------------------------------------------------------- #
# Training drivers
# ---------------------------------------------------------------------- #

def _check_graphs(kg_pos: KnowledgeGraph, kg_neg: KnowledgeGraph) -> None:
	if kg_pos.vocab is not kg_neg.vocab:
		raise ValueError("positive and negative graphs must share one vocabulary")
	if len(kg_pos) == 0 or len(kg_neg) == 0:
		raise ValueError("both graphs must contain at least one triple")


def init_dual_state(kg_pos: KnowledgeGraph, cfg: TrainConfig) -> DualModelState:
	vocab = kg_pos.vocab
	return DualModelState(
		pos_model=init_model(cfg.kind, cfg.dim, vocab.n_entities, vocab.n_relations, cfg.seed),
		neg_model=init_model(cfg.kind, cfg.dim, vocab.n_entities, vocab.n_relations, cfg.seed + 1),
		epoch=0,
		rng=np.random.default_rng([cfg.seed, 2]),
	)


def train_dual(
	kg_pos: KnowledgeGraph,
	kg_neg: KnowledgeGraph,
	cfg: TrainConfig,
	*,
	state: Optional[DualModelState] = None,
	progress: bool = False,
) -> DualModelState:
	"""Run (or resume) the lockstep training of both models up to cfg.epochs."""
	cfg.validate()
	_check_graphs(kg_pos, kg_neg)
	if state is None:
		state = init_dual_state(kg_pos, cfg)
	for m in (state.pos_model, state.neg_model):
		if m.dim != cfg.dim or m.kind != cfg.kind:
			raise ValueError("resumed state does not match the training configuration")
		if cfg.optimizer == ADAGRAD:
			m.ensure_accumulators()
	if state.contrastive_cache is not None and (
		len(state.contrastive_cache[0]) != len(kg_pos) or len(state.contrastive_cache[1]) != len(kg_neg)
	):
		raise ValueError("cached contrastive samples do not match the training graphs")

	executor = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
	try:
		epochs = range(state.epoch + 1, cfg.epochs + 1)
		for epoch in tqdm(epochs, desc="dual", disable=not progress):
			if epoch > cfg.cl_phase:
				since = epoch - cfg.cl_phase - 1
				if state.contrastive_cache is None or since % cfg.regen_interval == 0:
					state.contrastive_cache = (
						contrastive_corrupt(kg_pos, state.neg_model, state.rng, cfg.pool_size, executor=executor),
						contrastive_corrupt(kg_neg, state.pos_model, state.rng, cfg.pool_size, executor=executor),
					)
				neg_for_pos, neg_for_neg = state.contrastive_cache
				provenance = CONTRASTIVE
			else:
				neg_for_pos = random_corrupt(kg_pos, state.rng)
				neg_for_neg = random_corrupt(kg_neg, state.rng)
				provenance = RANDOM
			order_pos = state.rng.permutation(len(kg_pos))
			order_neg = state.rng.permutation(len(kg_neg))

			if executor is not None:
				fut_pos = executor.submit(_train_pass, state.pos_model, kg_pos, neg_for_pos, order_pos, cfg)
				fut_neg = executor.submit(_train_pass, state.neg_model, kg_neg, neg_for_neg, order_neg, cfg)
				loss_pos, loss_neg = fut_pos.result(), fut_neg.result()
			else:
				loss_pos = _train_pass(state.pos_model, kg_pos, neg_for_pos, order_pos, cfg)
				loss_neg = _train_pass(state.neg_model, kg_neg, neg_for_neg, order_neg, cfg)
			state.epoch = epoch
			state.loss_history.append(EpochRecord(epoch, loss_pos, loss_neg, provenance))
		if cfg.regen_interval == 1:
			state.contrastive_cache = None
	finally:
		if executor is not None:
			executor.shutdown(wait=True)
	return state


def final_representation(state: DualModelState, entity: int) -> np.ndarray:
	"""Concatenation of an entity's positive-model and negative-model rows."""
	n = state.pos_model.n_entities
	if not (0 <= int(entity) < n):
		raise ValueError(f"entity index {entity} out of range (0..{n - 1})")
	return np.concatenate([state.pos_model.entity_params[entity], state.neg_model.entity_params[entity]])


def baseline_config(cfg: TrainConfig) -> TrainConfig:
	"""Same run settings with twice the embedding dimension and no contrastive phase."""
	return replace(cfg, dim=2 * cfg.dim, cl_phase=cfg.epochs)


def train_single(
	kg: KnowledgeGraph,
	cfg: TrainConfig,
	*,
	side: str = "pos",
	state: Optional[SingleModelState] = None,
	progress: bool = False,
) -> SingleModelState:
	"""Train one model with random corruption every epoch, at cfg.dim as given."""
	cfg.validate()
	if len(kg) == 0:
		raise ValueError("graph must contain at least one triple")
	if side not in ("pos", "neg"):
		raise ValueError(f"side must be 'pos' or 'neg', got {side!r}")
	if state is None:
		vocab = kg.vocab
		seed = cfg.seed if side == "pos" else cfg.seed + 1
		state = SingleModelState(
			model=init_model(cfg.kind, cfg.dim, vocab.n_entities, vocab.n_relations, seed),
			side=side,
			epoch=0,
			rng=np.random.default_rng([cfg.seed, 2]),
		)
	if state.model.dim != cfg.dim or state.model.kind != cfg.kind:
		raise ValueError("resumed state does not match the training configuration")
	if cfg.optimizer == ADAGRAD:
		state.model.ensure_accumulators()
	for epoch in tqdm(range(state.epoch + 1, cfg.epochs + 1), desc=f"baseline-{side}", disable=not progress):
		negatives = random_corrupt(kg, state.rng)
		order = state.rng.permutation(len(kg))
		loss = _train_pass(state.model, kg, negatives, order, cfg)
		state.epoch = epoch
		if side == "pos":
			state.loss_history.append(EpochRecord(epoch, loss, None, RANDOM))
		else:
			state.loss_history.append(EpochRecord(epoch, None, loss, RANDOM))
	return state


def train_baseline(kg: KnowledgeGraph, cfg: TrainConfig, *, side: str = "pos") -> EmbeddingModel:
	"""Single-graph baseline at twice cfg.dim, random negatives throughout."""
	return train_single(kg, baseline_config(cfg), side=side).model
