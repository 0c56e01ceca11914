from __future__ import annotations

"""Subcommand registration package for DualKGE.

Exposes a single `register_commands(subparsers)` that sets up every
subcommand from its own module and returns their names.
"""

import argparse
from typing import List, Optional

from .common import SharedContext


def register_commands(subparsers: argparse._SubParsersAction, shared: Optional[SharedContext] = None) -> List[str]:
    """Register all DualKGE subcommands on an argparse subparser group and return names."""
    shared = shared or SharedContext.from_env()

    names: List[str] = []

    from .build_dataset import register as reg_build_dataset
    from .train import register as reg_train
    from .eval import register as reg_eval
    from .sweep import register as reg_sweep
    from .export import register as reg_export
    from .compare import register as reg_compare

    names.append(reg_build_dataset(subparsers, shared))
    names.append(reg_train(subparsers, shared))
    names.append(reg_eval(subparsers, shared))
    names.append(reg_sweep(subparsers, shared))
    names.append(reg_export(subparsers, shared))
    names.append(reg_compare(subparsers, shared))

    return names
