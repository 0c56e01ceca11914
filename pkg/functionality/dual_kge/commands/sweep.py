from __future__ import annotations

import argparse
import os
from dataclasses import replace
from typing import Any

from tqdm import tqdm

from ..downstream import METRICS, evaluate_triple_classification
from ..evaluation import evaluate_link_prediction, model_scorer, sem_at_ks
from ..kg_store import load_graph_pair, parse_pairs, parse_triples, parse_type_map
from ..reports import write_sweep_csv
from ..trainer import train_dual
from .common import (
    TRAIN_SETTINGS,
    SharedContext,
    UsageError,
    add_forest_arguments,
    add_train_arguments,
    ensure_dir,
    forest_config_from,
    load_config_values,
    parse_int_list,
    resolve_path,
    resolve_settings,
    train_config_from,
)

DEFAULT_CL_PHASES = "100,150,200,250,300,350"
DEFAULT_DIMS = "20,30,40,50"


def run(args: argparse.Namespace, shared: SharedContext) -> int:
    if not args.test and not args.pairs:
        raise UsageError("sweep needs --test (link prediction) and/or --pairs (triple classification)")
    if args.types and not args.test:
        raise UsageError("--types needs --test")
    file_values = load_config_values(args)
    settings = resolve_settings(args, TRAIN_SETTINGS, file_values)
    settings["mode"] = "dual"
    cl_phases = parse_int_list(args.cl_phases, "--cl-phases")
    dims = parse_int_list(args.dims, "--dims")
    threads = shared.threads_for(args)
    progress = shared.progress if args.progress is None else bool(args.progress)

    kg_pos, kg_neg = load_graph_pair(
        resolve_path(args, "pos", file_values), resolve_path(args, "neg", file_values)
    )
    vocab = kg_pos.vocab
    test = parse_triples(args.test, vocab) if args.test else None
    types = parse_type_map(args.types, vocab) if args.types else None
    pairs = parse_pairs(args.pairs, vocab) if args.pairs else None
    ks = parse_int_list(args.ks, "--ks")
    # The grid overrides cl_phase, so the base only needs to be valid on its own.
    base = train_config_from({**settings, "cl_phase": min(settings["cl_phase"], settings["epochs"])}, threads)
    forest_cfg = forest_config_from(args, settings["seed"]) if pairs is not None else None

    rows: list[tuple[int, int, str, Any]] = []
    cells = [(c, d) for c in cl_phases for d in dims]
    with shared.pool(threads) as executor:
        for cl_phase, dim in tqdm(cells, desc="sweep", disable=not progress):
            try:
                cfg = replace(base, cl_phase=cl_phase, dim=dim)
                state = train_dual(kg_pos, kg_neg, cfg)
                cell: list[tuple[str, Any]] = []
                if test is not None:
                    scorer = model_scorer(state.pos_model)
                    lp = evaluate_link_prediction(scorer, test, kg_pos, ks, executor=executor)
                    cell.append(("mrr_avg", lp.mrr_avg))
                    cell += [(f"hits@{k}", lp.hits[k][2]) for k in lp.hits]
                    if types is not None:
                        sem = sem_at_ks(scorer, test, kg_pos, types, ks, executor=executor)
                        cell += [(f"sem@{k}", sem.sem[k][2]) for k in sem.sem]
                if pairs is not None:
                    tc = evaluate_triple_classification(
                        state,
                        pairs,
                        forest_cfg,
                        k=args.folds,
                        seed=settings["seed"],
                        auc_from_labels=args.auc_from_labels,
                        executor=executor,
                    )
                    cell += [(m, tc.median[m]) for m in METRICS]
            except (ValueError, FloatingPointError, RuntimeError) as exc:
                print(f"⚠️ Sweep cell cl_phase={cl_phase} dim={dim} failed: {exc}")
                rows.append((cl_phase, dim, "error", str(exc)))
                continue
            rows.extend((cl_phase, dim, name, value) for name, value in cell)

    out = args.out or os.path.join(ensure_dir(args.out_dir or shared.output_dir), "sweep.csv")
    write_sweep_csv(out, rows)
    print(f"✅ Sweep of {len(cells)} cell(s) written to {out}")
    return 0


def register(subparsers: argparse._SubParsersAction, shared: SharedContext) -> str:
    p = subparsers.add_parser("sweep", help="Train and evaluate a grid of (cl_phase, dim) settings")
    p.add_argument("--pos", default=None, help="training positives TSV")
    p.add_argument("--neg", default=None, help="training negatives TSV")
    p.add_argument("--test", default=None, help="test positives TSV; adds link-prediction rows")
    p.add_argument("--types", default=None, help="optional type map; adds Sem@K rows")
    p.add_argument("--pairs", default=None, help="labelled entity pairs TSV; adds triple-classification rows")
    p.add_argument("--cl-phases", dest="cl_phases", default=DEFAULT_CL_PHASES)
    p.add_argument("--dims", default=DEFAULT_DIMS)
    p.add_argument("--ks", default="1,10")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--out", default=None, help="CSV path (default: <out-dir>/sweep.csv)")
    add_train_arguments(p)
    add_forest_arguments(p)
    p.set_defaults(func=run)
    return "sweep"
