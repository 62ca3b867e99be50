"""End-to-end pipeline for one question: understand, compress, search, select."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from ..core.dataset import DatabaseRegistry
from ..core.types import EvalCase
from ..llm.gateway import Gateway
from ..schema_link.compress import compress_schema
from ..schema_link.mschema import render_m_schema
from ..search.mcts import run_search
from ..selection.verify import SelectionResult, run_selection
from ..understanding.pipeline import ValidatedState, run_understanding
from ..understanding.rules import RuleBase, default_rulebase
from ..understanding.state import SemanticState
from .config import PipelineConfig

log = logging.getLogger(__name__)


@dataclass
class CaseResult:
    question_id: str
    db_id: str
    predicted_sql: str | None = None
    error: str | None = None
    n_candidates: int = 0
    reward: float | None = None
    signals: dict[str, float] = field(default_factory=dict)
    fallback: bool = False
    compression_ratio: float | None = None
    traces: dict[str, Any] = field(default_factory=dict)

    def record(self) -> dict[str, Any]:
        return {
            "question_id": self.question_id,
            "db_id": self.db_id,
            "predicted_sql": self.predicted_sql,
            "error": self.error,
            "n_candidates": self.n_candidates,
            "reward": self.reward,
            "signals": dict(self.signals),
            "understanding_fallback": self.fallback,
            "compression_ratio": self.compression_ratio,
        }


def _pick_without_selection(candidates) -> SelectionResult:
    if not candidates:
        return SelectionResult(None, None, diagnostics=["no candidates: no answer"])
    i = min(range(len(candidates)), key=lambda k: (-candidates[k].reward, -candidates[k].multiplicity, k))
    return SelectionResult(candidates[i], i, retained=list(range(len(candidates))), diagnostics=["selection disabled"])


def run_pipeline(
    case: EvalCase,
    config: PipelineConfig,
    gateway: Gateway,
    registry: DatabaseRegistry,
    rulebase: RuleBase | None = None,
) -> CaseResult:
    """Stage failures are recorded on the result; they never raise."""
    q = case.question
    result = CaseResult(q.id, q.db_id)
    stage = "load"
    try:
        handle = registry.get(q.db_id)
        schema = handle.schema
        rulebase = rulebase or (
            RuleBase.from_file(config.understanding.rules_file) if config.understanding.rules_file else default_rulebase()
        )
        full_doc = render_m_schema(schema)

        stage = "understanding"
        if config.harness.understanding:
            validated = run_understanding(
                q, schema, rulebase, config.understanding.stage_config(), gateway, schema_text=full_doc,
                seed=config.search.seed,
            )
        else:
            validated = ValidatedState(q, SemanticState())
        result.fallback = validated.fallback
        result.traces["understanding"] = validated.trace()

        stage = "schema_link"
        if config.harness.compression:
            compression = compress_schema(schema, validated, config.schema_link)
            doc = render_m_schema(schema, compression)
            result.compression_ratio = compression.ratio
            result.traces["understanding"]["compression"] = compression.to_dict()
        else:
            doc = full_doc

        stage = "search"
        policy = config.exec.policy()
        search = run_search(
            q.id, q.text, doc, validated, config.search, gateway, handle, policy=policy,
            timeout_ms=config.exec.timeout_ms,
        )
        result.traces["search"] = search.trace()
        result.n_candidates = len(search.candidates)

        stage = "selection"
        if config.harness.selection:
            selection = run_selection(
                search.candidates, config.selection, gateway, handle,
                question_id=q.id, question_text=q.text, schema_doc=doc, policy=policy,
                timeout_ms=config.exec.timeout_ms,
                gold_sql=case.gold_sql if config.selection.exec_mode == "oracle" else None,
            )
        else:
            selection = _pick_without_selection(search.candidates)
        result.traces["selection"] = selection.trace(search.candidates)
        if selection.chosen is not None:
            result.predicted_sql = selection.chosen.sql
            result.reward = selection.chosen.reward
            if selection.scores:
                s = selection.scores[selection.chosen_index]
                result.signals = {"exec": s.exec, "disc_conf": s.disc_conf, "cons_vote": s.cons_vote, "total": s.total}
    except Exception as exc:  # noqa: BLE001 - per-case isolation
        log.warning("question %s failed in %s: %s", q.id, stage, exc)
        result.error = f"{stage}: {type(exc).__name__}: {exc}"
    return result
