from __future__ import annotations

import argparse
import os
from typing import Any, Optional

from ..config import RunConfigStore
from ..kg_store import load_graph_pair, parse_triples
from ..state import MODE_DUAL, Checkpoint, CheckpointStore, read_loss_csv, write_loss_csv
from ..trainer import baseline_config, train_dual, train_single
from .common import (
    MODES,
    TRAIN_SETTINGS,
    SharedContext,
    UsageError,
    add_train_arguments,
    ensure_dir,
    load_config_values,
    resolve_path,
    resolve_settings,
    train_config_from,
)

CHECKPOINT_FILE = "checkpoint.json"
LOSS_FILE = "loss.csv"
RESOLVED_FILE = "resolved_config.json"


def _threads(args: argparse.Namespace, file_values: dict[str, Any], shared: SharedContext) -> int:
    if args.threads is not None:
        return shared.threads_for(args)
    raw = file_values.get("threads")
    if raw is not None:
        try:
            value = int(raw)
        except (TypeError, ValueError):
            raise UsageError(f"threads must be an integer, got {raw!r}")
        if value < 1:
            raise UsageError(f"threads must be >= 1, got {value}")
        return value
    return shared.threads


def _restore_loss_history(resumed: Checkpoint, checkpoint_path: str) -> None:
    """Reload the loss rows written next to the resumed checkpoint, up to its epoch."""
    path = os.path.join(os.path.dirname(checkpoint_path) or ".", LOSS_FILE)
    if not os.path.exists(path):
        print(f"⚠️ No {LOSS_FILE} next to {checkpoint_path}; the loss history starts at epoch {resumed.epoch + 1}.")
        return
    resumed.state.loss_history = [r for r in read_loss_csv(path) if r.epoch <= resumed.epoch]


def run(args: argparse.Namespace, shared: SharedContext) -> int:
    resumed: Optional[Checkpoint] = CheckpointStore(args.resume).load() if args.resume else None
    file_values = dict(resumed.config) if resumed else {}
    file_values.update(load_config_values(args))
    settings = resolve_settings(args, TRAIN_SETTINGS, file_values)
    pos_path = resolve_path(args, "pos", file_values)
    neg_path = resolve_path(args, "neg", file_values)
    out_dir = ensure_dir(resolve_path(args, "out_dir", file_values, required=False) or shared.output_dir)
    threads = _threads(args, file_values, shared)
    progress = shared.progress if args.progress is None else bool(args.progress)
    cfg = train_config_from(settings, threads)
    mode = settings["mode"]

    if resumed is not None:
        if resumed.mode != mode:
            raise UsageError(f"cannot resume a {resumed.mode} checkpoint in {mode} mode")
        kg_pos = parse_triples(pos_path, resumed.vocab)
        kg_neg = parse_triples(neg_path, resumed.vocab)
        print(f"📦 Resuming {mode} training from epoch {resumed.epoch}.")
        _restore_loss_history(resumed, args.resume)
    else:
        kg_pos, kg_neg = load_graph_pair(pos_path, neg_path)
    vocab = kg_pos.vocab
    print(f"📦 Loaded {len(kg_pos)} positive and {len(kg_neg)} negative triples ({vocab.n_entities} entities, {vocab.n_relations} relations).")

    if mode == MODE_DUAL:
        state = train_dual(kg_pos, kg_neg, cfg, state=resumed.state if resumed else None, progress=progress)
        model_dim = cfg.dim
    else:
        side = "pos" if mode == "baseline-pos" else "neg"
        bcfg = baseline_config(cfg)
        state = train_single(
            kg_pos if side == "pos" else kg_neg,
            bcfg,
            side=side,
            state=resumed.state if resumed else None,
            progress=progress,
        )
        model_dim = bcfg.dim

    resolved = dict(settings)
    resolved.update(
        learning_rate=cfg.learning_rate,
        optimizer=cfg.optimizer,
        model_dim=model_dim,
        width=cfg.kind.width(model_dim),
    )
    CheckpointStore(os.path.join(out_dir, CHECKPOINT_FILE)).save(
        Checkpoint(mode=mode, vocab=vocab, state=state, config=resolved)
    )
    write_loss_csv(os.path.join(out_dir, LOSS_FILE), state.loss_history)
    RunConfigStore(os.path.join(out_dir, RESOLVED_FILE)).save(
        {**resolved, "pos": pos_path, "neg": neg_path, "out_dir": out_dir, "threads": threads}
    )
    print(f"✅ Trained {mode} ({cfg.kind.name}, width {cfg.kind.width(model_dim)}) to epoch {state.epoch}; outputs in {out_dir}")
    return 0


def register(subparsers: argparse._SubParsersAction, shared: SharedContext) -> str:
    p = subparsers.add_parser("train", help="Train the dual model pair or a single-graph baseline")
    p.add_argument("--pos", default=None, help="training positives TSV")
    p.add_argument("--neg", default=None, help="training negatives TSV")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    add_train_arguments(p)
    p.set_defaults(func=run)
    return "train"
