from __future__ import annotations

import argparse

from ..export import WHICH, write_embeddings
from ..state import CheckpointStore
from .common import SharedContext


def run(args: argparse.Namespace, shared: SharedContext) -> int:
    checkpoint = CheckpointStore(args.checkpoint).load()
    rows = write_embeddings(args.out, checkpoint, args.which)
    print(f"✅ Exported {rows} {args.which} row(s) to {args.out}")
    return 0


def register(subparsers: argparse._SubParsersAction, shared: SharedContext) -> str:
    p = subparsers.add_parser("export", help="Write embeddings from a checkpoint as TSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--which", choices=WHICH, default="pos")
    p.set_defaults(func=run)
    return "export"
