from __future__ import annotations

"""Shared helpers and context for DualKGE subcommands."""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Mapping, Optional

from ..config import ConfigError, env_output_dir, env_progress, env_threads, read_config_file
from ..forest import ForestConfig
from ..kg_store import ParseError
from ..kge_models import ModelKind
from ..sampling import SamplingError
from ..state import CheckpointError
from ..trainer import TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(ValueError):
    """Raised for invalid or missing command-line arguments."""


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(exc, (ParseError, CheckpointError, OSError)):
        return EXIT_DATA
    if isinstance(exc, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(exc, (FloatingPointError, SamplingError)):
        return EXIT_RUNTIME
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    return EXIT_RUNTIME


@dataclass
class SharedContext:
    """Process-wide settings resolved from the environment."""

    threads: int
    output_dir: str
    progress: bool

    @classmethod
    def from_env(cls) -> "SharedContext":
        return cls(threads=env_threads(), output_dir=env_output_dir(), progress=env_progress())

    def threads_for(self, args: argparse.Namespace) -> int:
        value = getattr(args, "threads", None)
        if value is None:
            return self.threads
        if value < 1:
            raise UsageError(f"--threads must be >= 1, got {value}")
        return int(value)

    @contextmanager
    def pool(self, threads: int) -> Iterator[Optional[ThreadPoolExecutor]]:
        """Yield an executor for `threads` > 1, else None (serial)."""
        if threads <= 1:
            yield None
            return
        with ThreadPoolExecutor(max_workers=threads) as ex:
            yield ex


# ---------------------------------------------------------------------- #
# Typed setting resolution: flag > --config file > default
# ---------------------------------------------------------------------- #

def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _optional(convert: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def inner(value: Any) -> Any:
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "all")):
            return None
        return convert(value)

    return inner


# key -> (default, converter)
TRAIN_SETTINGS: dict[str, tuple[Any, Callable[[Any], Any]]] = {
    "mode": ("dual", str),
    "kind": ("transe", str),
    "p": (1, int),
    "complex_no_conj": (False, _to_bool),
    "dim": (50, int),
    "epochs": (400, int),
    "n_batches": (100, int),
    "neg_rate": (1, int),
    "cl_phase": (350, int),
    "learning_rate": (None, _optional(float)),
    "margin": (1.0, float),
    "reg_lambda": (1e-5, float),
    "optimizer": (None, _optional(str)),
    "seed": (0, int),
    "pool_size": (None, _optional(int)),
    "regen_interval": (1, int),
    "normalize_entities": (False, _to_bool),
}

MODES = ("dual", "baseline-pos", "baseline-neg")


def load_config_values(args: argparse.Namespace) -> dict[str, Any]:
    path = getattr(args, "config", None)
    return read_config_file(path) if path else {}


def resolve_settings(
    args: argparse.Namespace,
    specs: Mapping[str, tuple[Any, Callable[[Any], Any]]],
    file_values: Optional[Mapping[str, Any]] = None,
) -> dict[str, Any]:
    """Resolve each setting from its flag, then the config file, then its default."""
    file_values = file_values if file_values is not None else load_config_values(args)
    out: dict[str, Any] = {}
    for key, (default, convert) in specs.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_values.get(key)
        if value is None:
            out[key] = default
            continue
        try:
            out[key] = convert(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key}: {value!r} ({exc})") from exc
    return out


def resolve_path(args: argparse.Namespace, key: str, file_values: Mapping[str, Any], *, required: bool = True) -> Optional[str]:
    value = getattr(args, key, None) or file_values.get(key)
    if value is None and required:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return None if value is None else str(value)


def train_config_from(settings: Mapping[str, Any], threads: int = 1) -> TrainConfig:
    """Build a TrainConfig from resolved settings (dual-mode dimension)."""
    if settings["mode"] not in MODES:
        raise UsageError(f"--mode must be one of {', '.join(MODES)}, got {settings['mode']!r}")
    kind = ModelKind.parse(settings["kind"], p=settings["p"], conjugate=not settings["complex_no_conj"])
    return TrainConfig(
        kind=kind,
        epochs=settings["epochs"],
        n_batches=settings["n_batches"],
        neg_rate=settings["neg_rate"],
        cl_phase=settings["cl_phase"],
        dim=settings["dim"],
        learning_rate=settings["learning_rate"],
        margin=settings["margin"],
        reg_lambda=settings["reg_lambda"],
        optimizer=settings["optimizer"],
        seed=settings["seed"],
        pool_size=settings["pool_size"],
        regen_interval=settings["regen_interval"],
        normalize_entities=settings["normalize_entities"],
        threads=threads,
    )


def add_train_arguments(parser: argparse.ArgumentParser) -> None:
    """Hyperparameter flags shared by `train` and `sweep` (None means "not given")."""
    parser.add_argument("--kind", choices=("transe", "distmult", "complex"), default=None)
    parser.add_argument("--p", type=int, choices=(1, 2), default=None, help="TransE norm order")
    parser.add_argument("--complex-no-conj", dest="complex_no_conj", action="store_true", default=None)
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--n-batches", dest="n_batches", type=int, default=None)
    parser.add_argument("--neg-rate", dest="neg_rate", type=int, default=None)
    parser.add_argument("--cl-phase", dest="cl_phase", type=int, default=None)
    parser.add_argument("--lr", dest="learning_rate", type=float, default=None)
    parser.add_argument("--margin", type=float, default=None)
    parser.add_argument("--reg-lambda", dest="reg_lambda", type=float, default=None)
    parser.add_argument("--optimizer", choices=("sgd", "adagrad"), default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--pool-size", dest="pool_size", type=int, default=None)
    parser.add_argument("--regen-interval", dest="regen_interval", type=int, default=None)
    parser.add_argument("--normalize-entities", dest="normalize_entities", action="store_true", default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--progress", action="store_true", default=None)
    parser.add_argument("--config", default=None, help="key=value file or a previous resolved_config.json")


def add_forest_arguments(parser: argparse.ArgumentParser) -> None:
    """Random-forest and k-fold flags shared by `eval --task tc` and `sweep --pairs`."""
    parser.add_argument("--folds", type=int, default=5)
    parser.add_argument("--n-trees", dest="n_trees", type=int, default=100)
    parser.add_argument("--max-depth", dest="max_depth", type=int, default=None)
    parser.add_argument("--min-samples-split", dest="min_samples_split", type=int, default=2)
    parser.add_argument("--features-per-split", dest="features_per_split", type=int, default=None)
    parser.add_argument("--auc-from-labels", dest="auc_from_labels", action="store_true")


def forest_config_from(args: argparse.Namespace, seed: int) -> ForestConfig:
    return ForestConfig(
        n_trees=args.n_trees,
        max_depth=args.max_depth,
        min_samples_split=args.min_samples_split,
        features_per_split=args.features_per_split,
        seed=seed,
    )


def parse_int_list(raw: str, name: str) -> list[int]:
    try:
        values = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{name} must be a comma-separated list of integers, got {raw!r}")
    if not values:
        raise UsageError(f"{name} must not be empty")
    return values


def emit_json(payload: Mapping[str, Any], out: Optional[str]) -> None:
    """Write a report to `out`, or print it to stdout when no path is given."""
    if out:
        from ..reports import write_report

        write_report(out, payload)
        print(f"📄 Report written to {out}")
    else:
        json.dump(payload, sys.stdout, indent=2, ensure_ascii=False)
        sys.stdout.write("\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
