from __future__ import annotations

"""Report builders for evaluation results.

Every report is a flat JSON object with `schema_version` and `task` keys
followed by the metric fields of its task. Tables (sweeps, normalised
clustering scores) are tidy CSV files.
"""

import csv
import json
import os
from typing import Any, Iterable, Mapping, Optional

from .downstream import CLUSTER_METRICS, ClassificationReport, ClusteringScores, KruskalResult
from .evaluation import RankingReport, SemReport

REPORT_SCHEMA_VERSION = 1

TASK_LP = "lp"
TASK_SEM = "sem"
TASK_TC = "tc"
TASK_CLUSTER = "cluster"
TASK_COMPARE = "compare"
TASKS = (TASK_LP, TASK_SEM, TASK_TC, TASK_CLUSTER)


def _report(task: str, meta: Optional[Mapping[str, Any]], body: Mapping[str, Any]) -> dict[str, Any]:
	payload: dict[str, Any] = {"schema_version": REPORT_SCHEMA_VERSION, "task": task}
	if meta:
		payload.update(meta)
	payload.update(body)
	return payload


def build_lp_report(report: RankingReport, *, meta: Optional[Mapping[str, Any]] = None) -> dict[str, Any]:
	"""Link-prediction report: mrr_head/mrr_tail/mrr_avg plus hits@K objects."""
	return _report(TASK_LP, meta, report.to_payload())


def build_sem_report(report: SemReport, *, meta: Optional[Mapping[str, Any]] = None) -> dict[str, Any]:
	return _report(TASK_SEM, meta, report.to_payload())


def build_tc_report(report: ClassificationReport, *, meta: Optional[Mapping[str, Any]] = None) -> dict[str, Any]:
	return _report(TASK_TC, meta, report.to_payload())


def build_cluster_report(
	scores: ClusteringScores, *, n_entities: int, n_types: int, meta: Optional[Mapping[str, Any]] = None
) -> dict[str, Any]:
	body = dict(scores._asdict())
	body.update({"n_entities": n_entities, "n_types": n_types})
	return _report(TASK_CLUSTER, meta, body)


def build_compare_report(
	result: KruskalResult, *, metric: str, approaches: Iterable[str], meta: Optional[Mapping[str, Any]] = None
) -> dict[str, Any]:
	return _report(
		TASK_COMPARE,
		meta,
		{
			"metric": metric,
			"approaches": list(approaches),
			"h": result.h,
			"df": result.df,
			"critical_value": result.critical,
			"significant": result.significant,
		},
	)


def read_report(path: str) -> dict[str, Any]:
	"""Load a report written by `write_report`; the task key must be present."""
	with open(path, "r", encoding="utf-8") as f:
		data = json.load(f)
	if not isinstance(data, dict) or "task" not in data:
		raise ValueError(f"{path} is not an evaluation report")
	if data.get("schema_version") != REPORT_SCHEMA_VERSION:
		raise ValueError(f"{path}: unsupported report schema_version {data.get('schema_version')!r}")
	return data


def write_report(path: str, payload: Mapping[str, Any]) -> None:
	"""Write a report as pretty-printed JSON (atomic)."""
	os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
	tmp = f"{path}.tmp"
	with open(tmp, "w", encoding="utf-8") as f:
		f.write(json.dumps(payload, indent=2, ensure_ascii=False))
		f.write("\n")
	os.replace(tmp, path)


def _write_rows(path: str, header: list[str], rows: Iterable[Iterable[Any]]) -> None:
	os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
	tmp = f"{path}.tmp"
	with open(tmp, "w", encoding="utf-8", newline="") as f:
		writer = csv.writer(f, lineterminator="\n")
		writer.writerow(header)
		for row in rows:
			writer.writerow(row)
	os.replace(tmp, path)


def _value(value: Any) -> Any:
	return repr(value) if isinstance(value, float) else value


def write_sweep_csv(path: str, rows: Iterable[tuple[int, int, str, Any]]) -> None:
	"""Tidy `cl_phase,dim,metric,value` table; failed cells carry metric `error`."""
	_write_rows(path, ["cl_phase", "dim", "metric", "value"], ([c, d, m, _value(v)] for c, d, m, v in rows))


def write_normalized_csv(path: str, table: Mapping[str, Mapping[str, float]]) -> None:
	"""One row per approach with the min-max normalised clustering metrics."""
	_write_rows(
		path,
		["approach", *CLUSTER_METRICS],
		([name, *(_value(float(scores[m])) for m in CLUSTER_METRICS)] for name, scores in table.items()),
	)
