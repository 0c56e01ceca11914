from __future__ import annotations

"""Embedding parameters, scoring functions and their analytic gradients.

Three scoring families are supported, all "higher is more plausible":

- TransE:   -||h + r - t||_p
- DistMult: sum_i h_i r_i t_i
- ComplEx:  Re(sum_i h_i r_i conj(t_i)), or without the conjugate when the
			kind is built with `conjugate=False`

ComplEx rows store the real part in the first `dim` columns and the imaginary
part in the last `dim` columns. Parameters are float64.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .models import Triple

KIND_NAMES = ("transe", "distmult", "complex")
HEAD, TAIL = "head", "tail"


@dataclass(frozen=True)
class ModelKind:
	"""Scoring family plus its options."""

	name: str
	p: int = 1
	conjugate: bool = True

	def __post_init__(self) -> None:
		if self.name not in KIND_NAMES:
			raise ValueError(f"unknown model kind {self.name!r}; expected one of {', '.join(KIND_NAMES)}")
		if self.name == "transe" and self.p not in (1, 2):
			raise ValueError(f"TransE norm order must be 1 or 2, got {self.p}")

	@classmethod
	def parse(cls, name: str, *, p: int = 1, conjugate: bool = True) -> "ModelKind":
		return cls(name.strip().lower(), p=int(p), conjugate=bool(conjugate))

	def width(self, dim: int) -> int:
		return 2 * dim if self.name == "complex" else dim

	def to_payload(self) -> dict:
		return {"name": self.name, "p": self.p, "conjugate": self.conjugate}


@dataclass
class EmbeddingModel:
	"""Entity and relation matrices for one scoring family."""

	kind: ModelKind
	dim: int
	entity_params: np.ndarray
	relation_params: np.ndarray
	entity_accum: Optional[np.ndarray] = field(default=None, repr=False)
	relation_accum: Optional[np.ndarray] = field(default=None, repr=False)

	@property
	def width(self) -> int:
		return self.kind.width(self.dim)

	@property
	def n_entities(self) -> int:
		return int(self.entity_params.shape[0])

	@property
	def n_relations(self) -> int:
		return int(self.relation_params.shape[0])

	def ensure_accumulators(self) -> None:
		"""Create zeroed Adagrad accumulators if they are not there yet."""
		if self.entity_accum is None:
			self.entity_accum = np.zeros_like(self.entity_params)
		if self.relation_accum is None:
			self.relation_accum = np.zeros_like(self.relation_params)

	def copy(self) -> "EmbeddingModel":
		return EmbeddingModel(
			kind=self.kind,
			dim=self.dim,
			entity_params=self.entity_params.copy(),
			relation_params=self.relation_params.copy(),
			entity_accum=None if self.entity_accum is None else self.entity_accum.copy(),
			relation_accum=None if self.relation_accum is None else self.relation_accum.copy(),
		)

	def is_finite(self) -> bool:
		return bool(np.isfinite(self.entity_params).all() and np.isfinite(self.relation_params).all())


@dataclass
class SparseGrad:
	"""Gradient rows for the entity and relation rows a batch touched.

	Ids are unique and sorted; duplicate contributions are summed on build.
	"""

	entity_ids: np.ndarray
	entity_rows: np.ndarray
	relation_ids: np.ndarray
	relation_rows: np.ndarray

	@classmethod
	def build(
		cls,
		entity_ids: np.ndarray,
		entity_rows: np.ndarray,
		relation_ids: np.ndarray,
		relation_rows: np.ndarray,
	) -> "SparseGrad":
		e_ids, e_rows = _aggregate(entity_ids, entity_rows)
		r_ids, r_rows = _aggregate(relation_ids, relation_rows)
		return cls(e_ids, e_rows, r_ids, r_rows)

	def to_dense(self, n_entities: int, n_relations: int, width: int) -> tuple[np.ndarray, np.ndarray]:
		ent = np.zeros((n_entities, width))
		rel = np.zeros((n_relations, width))
		ent[self.entity_ids] = self.entity_rows
		rel[self.relation_ids] = self.relation_rows
		return ent, rel

	def entity(self, idx: int) -> np.ndarray:
		pos = np.flatnonzero(self.entity_ids == idx)
		return self.entity_rows[pos[0]] if pos.size else np.zeros(self.entity_rows.shape[1])

	def relation(self, idx: int) -> np.ndarray:
		pos = np.flatnonzero(self.relation_ids == idx)
		return self.relation_rows[pos[0]] if pos.size else np.zeros(self.relation_rows.shape[1])


def _aggregate(ids: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
	ids = np.asarray(ids, dtype=np.int64).reshape(-1)
	rows = np.asarray(rows, dtype=np.float64).reshape(ids.size, -1)
	uniq, inverse = np.unique(ids, return_inverse=True)
	out = np.zeros((uniq.size, rows.shape[1]))
	np.add.at(out, inverse, rows)
	return uniq, out


def _xavier(rng: np.random.Generator, rows: int, width: int) -> np.ndarray:
	bound = np.sqrt(6.0 / (rows + width))
	return rng.uniform(-bound, bound, size=(rows, width))


def init_model(kind: ModelKind, dim: int, n_entities: int, n_relations: int, seed: int) -> EmbeddingModel:
	"""Xavier-uniform initialisation of both matrices from one seeded stream."""
	if dim < 1:
		raise ValueError(f"dim must be >= 1, got {dim}")
	if n_entities < 1 or n_relations < 1:
		raise ValueError(f"entity and relation counts must be >= 1, got {n_entities} and {n_relations}")
	rng = np.random.default_rng(seed)
	width = kind.width(dim)
	return EmbeddingModel(
		kind=kind,
		dim=dim,
		entity_params=_xavier(rng, n_entities, width),
		relation_params=_xavier(rng, n_relations, width),
	)


# ---------------------------------------------------------------------- #
# Row-level kernels (leading axes broadcast)
# ---------------------------------------------------------------------- #

def _split_complex(x: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
	return x[..., :dim], x[..., dim:]


def score_rows(kind: ModelKind, dim: int, h: np.ndarray, r: np.ndarray, t: np.ndarray) -> np.ndarray:
	"""Score broadcastable stacks of head/relation/tail rows."""
	if kind.name == "transe":
		diff = h + r - t
		if kind.p == 1:
			return -np.abs(diff).sum(axis=-1)
		return -np.sqrt((diff * diff).sum(axis=-1))
	if kind.name == "distmult":
		return (h * r * t).sum(axis=-1)
	hr, hi = _split_complex(h, dim)
	rr, ri = _split_complex(r, dim)
	tr, ti = _split_complex(t, dim)
	if kind.conjugate:
		return (hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr).sum(axis=-1)
	return (hr * rr * tr - hi * ri * tr - hr * ri * ti - hi * rr * ti).sum(axis=-1)


def grad_rows(
	kind: ModelKind, dim: int, h: np.ndarray, r: np.ndarray, t: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
	"""Partial derivatives of the score w.r.t. the head, relation and tail rows."""
	h, r, t = np.broadcast_arrays(h, r, t)
	if kind.name == "transe":
		diff = h + r - t
		if kind.p == 1:
			g = -np.sign(diff)
		else:
			norm = np.sqrt((diff * diff).sum(axis=-1, keepdims=True))
			safe = np.where(norm > 0.0, norm, 1.0)
			g = np.where(norm > 0.0, -diff / safe, 0.0)
		return g, g.copy(), -g
	if kind.name == "distmult":
		return r * t, h * t, h * r
	hr, hi = _split_complex(h, dim)
	rr, ri = _split_complex(r, dim)
	tr, ti = _split_complex(t, dim)
	if kind.conjugate:
		gh = np.concatenate([rr * tr + ri * ti, rr * ti - ri * tr], axis=-1)
		gr = np.concatenate([hr * tr + hi * ti, hr * ti - hi * tr], axis=-1)
		gt = np.concatenate([hr * rr - hi * ri, hi * rr + hr * ri], axis=-1)
	else:
		gh = np.concatenate([rr * tr - ri * ti, -ri * tr - rr * ti], axis=-1)
		gr = np.concatenate([hr * tr - hi * ti, -hi * tr - hr * ti], axis=-1)
		gt = np.concatenate([hr * rr - hi * ri, -hr * ri - hi * rr], axis=-1)
	return gh, gr, gt


# ---------------------------------------------------------------------- #
# Public operations
# ---------------------------------------------------------------------- #

def _check_triple(model: EmbeddingModel, triple: Sequence[int]) -> Triple:
	h, r, t = (int(x) for x in triple)
	if not (0 <= h < model.n_entities and 0 <= t < model.n_entities):
		raise ValueError(f"entity index out of range in {(h, r, t)} (model has {model.n_entities} entities)")
	if not (0 <= r < model.n_relations):
		raise ValueError(f"relation index out of range in {(h, r, t)} (model has {model.n_relations} relations)")
	return Triple(h, r, t)


def _check_triples(model: EmbeddingModel, triples: np.ndarray) -> np.ndarray:
	arr = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
	if arr.size:
		ents = arr[:, [0, 2]]
		if ents.min() < 0 or ents.max() >= model.n_entities:
			raise ValueError(f"entity index out of range (model has {model.n_entities} entities)")
		if arr[:, 1].min() < 0 or arr[:, 1].max() >= model.n_relations:
			raise ValueError(f"relation index out of range (model has {model.n_relations} relations)")
	return arr


def score(model: EmbeddingModel, triple: Sequence[int]) -> float:
	"""Plausibility of a single triple."""
	h, r, t = _check_triple(model, triple)
	return float(
		score_rows(model.kind, model.dim, model.entity_params[h], model.relation_params[r], model.entity_params[t])
	)


def score_batch(model: EmbeddingModel, triples: np.ndarray) -> np.ndarray:
	"""Scores for an (n, 3) array of triples."""
	arr = _check_triples(model, triples)
	E, R = model.entity_params, model.relation_params
	return score_rows(model.kind, model.dim, E[arr[:, 0]], R[arr[:, 1]], E[arr[:, 2]])


def score_all_corruptions(
	model: EmbeddingModel, triple: Sequence[int], slot: str, candidates: Iterable[int]
) -> np.ndarray:
	"""Scores of `triple` with `slot` replaced by each candidate entity."""
	h, r, t = _check_triple(model, triple)
	cands = np.fromiter(candidates, dtype=np.int64) if not isinstance(candidates, np.ndarray) else candidates.astype(np.int64)
	if cands.size == 0:
		raise ValueError("candidate list must not be empty")
	if cands.min() < 0 or cands.max() >= model.n_entities:
		raise ValueError(f"candidate entity out of range (model has {model.n_entities} entities)")
	E, R = model.entity_params, model.relation_params
	if slot == HEAD:
		return score_rows(model.kind, model.dim, E[cands], R[r], E[t])
	if slot == TAIL:
		return score_rows(model.kind, model.dim, E[h], R[r], E[cands])
	raise ValueError(f"slot must be {HEAD!r} or {TAIL!r}, got {slot!r}")


def grad(model: EmbeddingModel, triple: Sequence[int]) -> SparseGrad:
	"""Gradient of the score of one triple; only rows h, t and r are present."""
	h, r, t = _check_triple(model, triple)
	E, R = model.entity_params, model.relation_params
	gh, gr, gt = grad_rows(model.kind, model.dim, E[h], R[r], E[t])
	return SparseGrad.build(
		np.array([h, t]), np.stack([gh, gt]), np.array([r]), gr.reshape(1, -1)
	)
