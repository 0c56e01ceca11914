from .models import KnowledgeGraph, PairExample, Triple, TypeMap, Vocabulary
from .kg_store import (
	ParseError,
	build_dataset_filter,
	load_graph_pair,
	parse_pairs,
	parse_triples,
	parse_type_map,
	split_train_test,
	write_triples,
)
from .kge_models import EmbeddingModel, ModelKind, grad, init_model, score, score_all_corruptions, score_batch
from .sampling import NegativeSampleSet, SamplingError, contrastive_corrupt, random_corrupt
from .trainer import (
	DualModelState,
	EpochRecord,
	SingleModelState,
	TrainConfig,
	apply_update,
	final_representation,
	loss_and_grads,
	train_baseline,
	train_dual,
	train_single,
)
from .evaluation import (
	FilterIndex,
	RankingReport,
	SemReport,
	evaluate_link_prediction,
	model_scorer,
	rank_filtered,
	sem_at_k,
	sem_at_ks,
)
from .forest import Forest, ForestConfig, ForestError, forest_predict, forest_predict_batch, forest_train
from .downstream import (
	ClassificationReport,
	MetricError,
	classification_metrics,
	clustering_metrics,
	evaluate_triple_classification,
	kfold_split,
	kruskal_wallis,
	pair_features,
)
from .state import Checkpoint, CheckpointError, CheckpointStore, write_loss_csv
from .config import ConfigError, RunConfigStore, read_config_file
from .export import read_embeddings, write_embeddings

__all__ = [
	"KnowledgeGraph",
	"PairExample",
	"Triple",
	"TypeMap",
	"Vocabulary",
	"ParseError",
	"build_dataset_filter",
	"load_graph_pair",
	"parse_pairs",
	"parse_triples",
	"parse_type_map",
	"split_train_test",
	"write_triples",
	"EmbeddingModel",
	"ModelKind",
	"grad",
	"init_model",
	"score",
	"score_all_corruptions",
	"score_batch",
	"NegativeSampleSet",
	"SamplingError",
	"contrastive_corrupt",
	"random_corrupt",
	"DualModelState",
	"EpochRecord",
	"SingleModelState",
	"TrainConfig",
	"apply_update",
	"final_representation",
	"loss_and_grads",
	"train_baseline",
	"train_dual",
	"train_single",
	"FilterIndex",
	"RankingReport",
	"SemReport",
	"evaluate_link_prediction",
	"model_scorer",
	"rank_filtered",
	"sem_at_k",
	"sem_at_ks",
	"Forest",
	"ForestConfig",
	"ForestError",
	"forest_predict",
	"forest_predict_batch",
	"forest_train",
	"ClassificationReport",
	"MetricError",
	"classification_metrics",
	"clustering_metrics",
	"evaluate_triple_classification",
	"kfold_split",
	"kruskal_wallis",
	"pair_features",
	"Checkpoint",
	"CheckpointError",
	"CheckpointStore",
	"write_loss_csv",
	"ConfigError",
	"RunConfigStore",
	"read_config_file",
	"read_embeddings",
	"write_embeddings",
]
