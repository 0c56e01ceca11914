from __future__ import annotations

"""Run configuration: `--config` files, environment fallbacks and the
resolved-config artifact written next to every training run.
"""

import json
import os
from typing import Any
from threading import Lock

# Module-level lock to synchronize across multiple store instances in-process
_RUN_CFG_LOCK = Lock()

ENV_THREADS = "DUALKGE_THREADS"
ENV_OUTPUT_DIR = "DUALKGE_OUTPUT_DIR"
ENV_PROGRESS = "DUALKGE_PROGRESS"


class ConfigError(ValueError):
	"""Raised for unreadable config files or invalid configuration values."""


def _normalize_key(key: str) -> str:
	return key.strip().lstrip("-").replace("-", "_").lower()


def read_config_file(path: str) -> dict[str, Any]:
	"""Read a `key=value` file or a JSON object into a flat dict.

	Keys are normalised to underscores so `cl-phase`, `--cl-phase` and
	`cl_phase` all name the same setting. Values of `key=value` files stay
	strings and are converted by the command that consumes them.
	"""
	try:
		with open(path, "r", encoding="utf-8") as f:
			text = f.read()
	except OSError as exc:
		raise ConfigError(f"cannot read config file {path}: {exc}") from exc

	if text.lstrip().startswith("{"):
		return {_normalize_key(str(k)): v for k, v in RunConfigStore(path).load().items()}

	out: dict[str, Any] = {}
	for lineno, raw in enumerate(text.splitlines(), start=1):
		line = raw.strip()
		if not line or line.startswith("#"):
			continue
		if "=" not in line:
			raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
		key, value = line.split("=", 1)
		key = _normalize_key(key)
		if not key:
			raise ConfigError(f"{path}:{lineno}: empty key")
		out[key] = value.strip()
	return out


def env_threads() -> int:
	"""Worker threads from DUALKGE_THREADS, else the machine's CPU count."""
	raw = (os.getenv(ENV_THREADS, "") or "").strip()
	if raw:
		try:
			value = int(raw)
		except ValueError:
			raise ConfigError(f"Invalid {ENV_THREADS}: {raw!r}")
		if value < 1:
			raise ConfigError(f"{ENV_THREADS} must be >= 1, got {value}")
		return value
	return os.cpu_count() or 1


def env_output_dir() -> str:
	return os.getenv(ENV_OUTPUT_DIR, "runs") or "runs"


def env_progress() -> bool:
	return (os.getenv(ENV_PROGRESS, "false") or "false").strip().lower() == "true"


class RunConfigStore:
	"""JSON-backed store for a run's resolved configuration."""

	def __init__(self, path: str = "runs/resolved_config.json") -> None:
		"""Initialize the store with a filesystem path."""
		self.path = path

	def load(self) -> dict[str, Any]:
		"""Load a resolved config written by `save`; anything but a JSON object raises ConfigError."""
		try:
			with open(self.path, "r", encoding="utf-8") as f:
				data = json.load(f)
		except OSError as exc:
			raise ConfigError(f"cannot read run config {self.path}: {exc}") from exc
		except json.JSONDecodeError as exc:
			raise ConfigError(f"{self.path}: invalid JSON: {exc}") from exc
		if not isinstance(data, dict):
			raise ConfigError(f"{self.path}: expected a JSON object")
		return data

	def _atomic_write(self, payload: str) -> None:
		"""Atomically write JSON payload to the configured path."""
		dirname = os.path.dirname(self.path) or "."
		os.makedirs(dirname, exist_ok=True)
		tmp = f"{self.path}.tmp"
		with open(tmp, "w", encoding="utf-8") as f:
			f.write(payload)
		# os.replace is atomic on POSIX/Windows
		os.replace(tmp, self.path)

	def save(self, data: dict[str, Any]) -> None:
		"""Write the resolved config (atomic, process-synchronized)."""
		with _RUN_CFG_LOCK:
			payload = json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False)
			self._atomic_write(payload)

