from __future__ import annotations

import argparse
from typing import Optional

import numpy as np

from ..downstream import (
    REPR_CONCAT,
    REPR_POS,
    REPRS,
    clustering_metrics,
    entity_matrix,
    evaluate_triple_classification,
)
from ..evaluation import TIE_MEAN, TIE_OPTIMISTIC, evaluate_link_prediction, model_scorer, sem_at_ks, summed_scorer
from ..kg_store import parse_pairs, parse_triples, parse_type_map
from ..reports import (
    TASK_LP,
    TASK_SEM,
    TASK_TC,
    TASKS,
    build_cluster_report,
    build_lp_report,
    build_sem_report,
    build_tc_report,
)
from ..state import Checkpoint, CheckpointStore
from .common import SharedContext, UsageError, add_forest_arguments, emit_json, forest_config_from, parse_int_list


def _default_repr(task: str) -> str:
    return REPR_POS if task in (TASK_LP, TASK_SEM) else REPR_CONCAT


def _scorer(checkpoint: Checkpoint, repr: str):
    models = checkpoint.models()
    if len(models) == 1:
        return model_scorer(next(iter(models.values())))
    if repr == REPR_CONCAT:
        print("⚠️ concat link prediction sums the positive and negative model scores (experimental).")
        return summed_scorer(models["pos"], models["neg"])
    return model_scorer(models[repr])


def _require(value: Optional[str], flag: str, task: str) -> str:
    if not value:
        raise UsageError(f"task {task!r} needs {flag}")
    return value


def run(args: argparse.Namespace, shared: SharedContext) -> int:
    checkpoint = CheckpointStore(args.checkpoint).load()
    vocab = checkpoint.vocab
    task = args.task
    repr = args.repr or _default_repr(task)
    threads = shared.threads_for(args)
    meta = {"checkpoint": args.checkpoint, "mode": checkpoint.mode, "kind": checkpoint.kind.name, "repr": repr}

    with shared.pool(threads) as executor:
        if task in (TASK_LP, TASK_SEM):
            train = parse_triples(_require(args.train, "--train", task), vocab)
            test = parse_triples(_require(args.test, "--test", task), vocab)
            scorer = _scorer(checkpoint, repr)
            ks = parse_int_list(args.ks, "--ks")
            if task == TASK_LP:
                report = evaluate_link_prediction(
                    scorer,
                    test,
                    train,
                    ks,
                    filter_train_only=args.filter_train_only,
                    tie=TIE_MEAN if args.tie_mean else TIE_OPTIMISTIC,
                    executor=executor,
                )
                payload = build_lp_report(report, meta=meta)
            else:
                types = parse_type_map(_require(args.types, "--types", task), vocab)
                report = sem_at_ks(
                    scorer,
                    test,
                    train,
                    types,
                    ks,
                    filtered=not args.sem_raw,
                    filter_train_only=args.filter_train_only,
                    executor=executor,
                )
                payload = build_sem_report(report, meta=meta)
        elif task == TASK_TC:
            pairs = parse_pairs(_require(args.pairs, "--pairs", task), vocab)
            forest_cfg = forest_config_from(args, args.seed)
            report = evaluate_triple_classification(
                checkpoint.state,
                pairs,
                forest_cfg,
                k=args.folds,
                seed=args.seed,
                repr=repr,
                auc_from_labels=args.auc_from_labels,
                executor=executor,
            )
            payload = build_tc_report(report, meta=meta)
        else:
            types = parse_type_map(_require(args.types, "--types", task), vocab)
            matrix = entity_matrix(checkpoint.state, repr)
            typed = sorted(types.mapping)
            labels = [types.mapping[e] for e in typed]
            print(f"📦 Clustering {len(typed)} typed entities over {len(set(labels))} types.")
            scores = clustering_metrics(matrix[np.asarray(typed, dtype=np.int64)], labels)
            payload = build_cluster_report(scores, n_entities=len(typed), n_types=len(set(labels)), meta=meta)

    emit_json(payload, args.out)
    return 0


def register(subparsers: argparse._SubParsersAction, shared: SharedContext) -> str:
    p = subparsers.add_parser("eval", help="Evaluate a checkpoint: lp, sem, tc or cluster")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--train", default=None, help="training positives (filter set for lp/sem)")
    p.add_argument("--test", default=None, help="test positives for lp/sem")
    p.add_argument("--types", default=None, help="entity type map TSV (sem, cluster)")
    p.add_argument("--pairs", default=None, help="labelled entity pairs TSV (tc)")
    p.add_argument("--repr", choices=REPRS, default=None)
    p.add_argument("--ks", default="1,10", help="comma-separated K values")
    p.add_argument("--tie-mean", dest="tie_mean", action="store_true")
    p.add_argument("--filter-train-only", dest="filter_train_only", action="store_true")
    p.add_argument("--sem-raw", dest="sem_raw", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    add_forest_arguments(p)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="report path (default: print to stdout)")
    p.set_defaults(func=run)
    return "eval"
