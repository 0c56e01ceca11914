from __future__ import annotations

import argparse
import os

from ..downstream import CLUSTER_METRICS, METRICS, ClusteringScores, kruskal_wallis, normalize_clustering_table
from ..reports import TASK_CLUSTER, TASK_TC, build_compare_report, read_report, write_normalized_csv
from .common import SharedContext, UsageError, emit_json


def _names(args: argparse.Namespace) -> list[str]:
    if args.names:
        names = [n.strip() for n in args.names.split(",")]
        if len(names) != len(args.reports):
            raise UsageError(f"--names lists {len(names)} name(s) for {len(args.reports)} report(s)")
        return names
    return [os.path.splitext(os.path.basename(p))[0] for p in args.reports]


def run(args: argparse.Namespace, shared: SharedContext) -> int:
    reports = [read_report(p) for p in args.reports]
    tasks = {r["task"] for r in reports}
    if len(tasks) != 1:
        raise UsageError(f"reports mix tasks: {', '.join(sorted(tasks))}")
    task = tasks.pop()
    names = _names(args)

    if task == TASK_TC:
        if args.metric not in METRICS:
            raise UsageError(f"--metric must be one of {', '.join(METRICS)} for tc reports")
        groups = [
            [fold[args.metric] for fold in r["folds"] if args.metric in fold]
            for r in reports
        ]
        result = kruskal_wallis(groups)
        verdict = "significant" if result.significant else "not significant"
        print(f"📊 Kruskal-Wallis on {args.metric}: H={result.h:.4f}, df={result.df} ({verdict} at 0.05)")
        emit_json(build_compare_report(result, metric=args.metric, approaches=names), args.out)
        return 0

    if task == TASK_CLUSTER:
        rows = {name: ClusteringScores(*(float(r[m]) for m in CLUSTER_METRICS)) for name, r in zip(names, reports)}
        table = normalize_clustering_table(rows)
        if not args.out:
            raise UsageError("clustering comparison needs --out for the normalised CSV")
        write_normalized_csv(args.out, table)
        print(f"📊 Normalised clustering table for {len(rows)} approach(es) written to {args.out}")
        return 0

    raise UsageError(f"compare supports tc and cluster reports, got {task!r}")


def register(subparsers: argparse._SubParsersAction, shared: SharedContext) -> str:
    p = subparsers.add_parser("compare", help="Compare approaches from their tc or cluster reports")
    p.add_argument("reports", nargs="+", help="report JSON files, one per approach")
    p.add_argument("--names", default=None, help="comma-separated approach names (default: file stems)")
    p.add_argument("--metric", default="f1", help="tc metric to test (precision, recall, f1, auc)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=run)
    return "compare"
