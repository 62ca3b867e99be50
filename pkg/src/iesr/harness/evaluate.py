"""Batch evaluation: run the pipeline per case, score EX, and write the run directory."""

from __future__ import annotations

import hashlib
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .. import __version__
from ..core.dataset import DatabaseRegistry, LoadedDataset, case_to_record
from ..core.types import EvalCase
from ..llm.costs import report_costs
from ..llm.gateway import Gateway
from ..sqlexec.ex import judge_case
from ..understanding.rules import RuleBase
from .config import PipelineConfig
from .pipeline import CaseResult, run_pipeline

log = logging.getLogger(__name__)

REPORT_VERSION = 1
_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def _bucket() -> dict[str, Any]:
    return {"correct": 0, "total": 0, "ex": 0.0}


def _finish(bucket: dict[str, Any]) -> dict[str, Any]:
    bucket["ex"] = 100.0 * bucket["correct"] / bucket["total"] if bucket["total"] else 0.0
    return bucket


@dataclass
class Report:
    ex: float
    correct: int
    total: int
    by_difficulty: dict[str, dict[str, Any]] = field(default_factory=dict)
    by_reasoning_type: dict[str, dict[str, Any]] = field(default_factory=dict)
    records: list[dict[str, Any]] = field(default_factory=list)
    costs: dict[str, Any] = field(default_factory=dict)
    invalid_gold: list[str] = field(default_factory=list)
    load_errors: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": REPORT_VERSION,
            "ex": self.ex,
            "correct": self.correct,
            "total": self.total,
            "by_difficulty": self.by_difficulty,
            "by_reasoning_type": self.by_reasoning_type,
            "records": self.records,
            "costs": self.costs,
            "invalid_gold": self.invalid_gold,
            "load_errors": self.load_errors,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Report:
        return cls(
            raw["ex"], raw["correct"], raw["total"], raw.get("by_difficulty", {}), raw.get("by_reasoning_type", {}),
            raw.get("records", []), raw.get("costs", {}), raw.get("invalid_gold", []), raw.get("load_errors", []),
        )

    @classmethod
    def load(cls, path: Path | str) -> Report:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def safe_name(qid: str) -> str:
    return _UNSAFE.sub("_", qid) or "_"


def dataset_hash(cases: list[EvalCase]) -> str:
    payload = json.dumps([case_to_record(c) for c in cases], sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def build_manifest(
    config: PipelineConfig, cases: list[EvalCase], *, mock_script: Path | str | None = None
) -> dict[str, Any]:
    manifest = {
        "config": config.to_dict(),
        "seeds": {
            "search": config.search.seed,
            "probe": config.selection.probe_seed,
            "lsh": config.schema_link.seed,
        },
        "dataset_hash": dataset_hash(cases),
        "code_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if mock_script:
        manifest["mock_script_hash"] = hashlib.sha256(Path(mock_script).read_bytes()).hexdigest()
    return manifest


def _assemble(
    cases: list[EvalCase], results: list[CaseResult], registry: DatabaseRegistry, config: PipelineConfig
) -> Report:
    policy = config.exec.policy()
    by_diff: dict[str, dict[str, Any]] = {}
    by_type: dict[str, dict[str, Any]] = {}
    records: list[dict[str, Any]] = []
    invalid: list[str] = []
    correct = total = 0
    for i, (case, res) in enumerate(zip(cases, results)):
        q = case.question
        rec = res.record()
        rec["difficulty"] = q.difficulty
        rec["reasoning_type"] = q.reasoning_type or "unspecified"
        rec["traces"] = {
            stage: f"traces/{safe_name(q.id)}/{stage}.json" for stage in ("understanding", "search", "selection")
            if stage in res.traces
        }
        if not case.gold_valid:
            rec["verdict"] = "invalid_gold"
            invalid.append(q.id)
            records.append(rec)
            continue
        try:
            handle = registry.get(q.db_id)
            verdict = judge_case(res.predicted_sql, case.gold_sql, handle, policy, config.exec.timeout_ms, index=i)
        except Exception as exc:  # noqa: BLE001 - recorded as incorrect
            rec["verdict"] = "error"
            rec["error"] = rec["error"] or str(exc)
            ok = False
        else:
            if verdict.invalid_gold:
                rec["verdict"] = "invalid_gold"
                invalid.append(q.id)
                records.append(rec)
                continue
            rec["verdict"] = verdict.tag
            ok = verdict.correct
        rec["correct"] = ok
        total += 1
        correct += int(ok)
        for table, key in ((by_diff, q.difficulty), (by_type, rec["reasoning_type"])):
            b = table.setdefault(key, _bucket())
            b["total"] += 1
            b["correct"] += int(ok)
        records.append(rec)
    return Report(
        100.0 * correct / total if total else 0.0,
        correct,
        total,
        {k: _finish(v) for k, v in sorted(by_diff.items())},
        {k: _finish(v) for k, v in sorted(by_type.items())},
        records,
        invalid_gold=invalid,
    )


def evaluate(
    dataset: LoadedDataset | list[EvalCase],
    config: PipelineConfig,
    gateway: Gateway,
    registry: DatabaseRegistry | None = None,
    *,
    run_dir: Path | str | None = None,
    mock_script: Path | str | None = None,
    rulebase: RuleBase | None = None,
) -> Report:
    """Run every case (bounded worker pool), score EX, and optionally write the run directory."""
    cases = list(dataset)
    if registry is None:
        registry = getattr(dataset, "registry", None)
    if registry is None:
        raise ValueError("a database registry is required")
    manifest = build_manifest(config, cases, mock_script=mock_script)

    def one(case: EvalCase) -> CaseResult:
        return run_pipeline(case, config, gateway, registry, rulebase)

    if config.harness.workers == 1:
        results = [one(c) for c in cases]
    else:
        with ThreadPoolExecutor(max_workers=config.harness.workers) as pool:
            results = list(pool.map(one, cases))

    report = _assemble(cases, results, registry, config)
    report.costs = report_costs(gateway.ledger, len(cases)).to_dict() if cases else {}
    report.load_errors = [
        {"index": e.index, "message": e.message} for e in getattr(dataset, "errors", [])
    ]
    if run_dir is not None:
        write_run_dir(Path(run_dir), manifest, report, cases, results)
    return report


def write_run_dir(
    run_dir: Path, manifest: dict[str, Any], report: Report, cases: list[EvalCase], results: list[CaseResult]
) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (run_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    for case, res in zip(cases, results):
        qdir = run_dir / "traces" / safe_name(case.question.id)
        qdir.mkdir(parents=True, exist_ok=True)
        for stage, trace in res.traces.items():
            (qdir / f"{stage}.json").write_text(
                json.dumps(trace, indent=2, sort_keys=True, ensure_ascii=False, default=str) + "\n", encoding="utf-8"
            )
