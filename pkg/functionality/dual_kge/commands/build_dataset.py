from __future__ import annotations

import argparse
import os

from ..kg_store import build_dataset_filter, load_graph_pair, split_train_test, write_triples
from ..models import KnowledgeGraph
from .common import SharedContext, ensure_dir

DEFAULT_TEST_FRACTION = 0.2


def run(args: argparse.Namespace, shared: SharedContext) -> int:
    pos, neg = load_graph_pair(args.pos, args.neg)
    if len(neg) == 0:
        print("⚠️ The negative file holds no statements; the filtered dataset is empty.")
    filtered = build_dataset_filter(pos, neg)
    print(f"📦 Kept {len(filtered)} of {len(pos)} positive statements after the negative-statement filter.")

    if len(filtered):
        train, test = split_train_test(filtered, args.test_fraction, args.seed)
    else:
        train = test = KnowledgeGraph.from_triples(pos.vocab, [])

    out_dir = ensure_dir(args.out_dir or shared.output_dir)
    write_triples(os.path.join(out_dir, "train_pos.tsv"), train)
    write_triples(os.path.join(out_dir, "test_pos.tsv"), test)
    write_triples(os.path.join(out_dir, "train_neg.tsv"), neg)
    print(f"train_pos={len(train)}")
    print(f"train_neg={len(neg)}")
    print(f"test_pos={len(test)}")
    return 0


def register(subparsers: argparse._SubParsersAction, shared: SharedContext) -> str:
    p = subparsers.add_parser("build-dataset", help="Filter positives by negative (h, r) pairs and split train/test")
    p.add_argument("--pos", required=True, help="positive triples TSV")
    p.add_argument("--neg", required=True, help="negative triples TSV")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=DEFAULT_TEST_FRACTION)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=run)
    return "build-dataset"
