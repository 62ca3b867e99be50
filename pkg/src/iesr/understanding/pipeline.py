"""Understanding stage: extract a semantic state, then verify relations against rules."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Any

from ..core.types import DatabaseSchema, Question
from ..llm.gateway import Gateway, GatewayError, ModelRole
from .rules import Constraint, RuleBase
from .scoring import FAIL, PASS, ScoredRelation, SoftResolver, filter_high, match_relation, score_relation
from .state import RelationHypothesis, SemanticState, UnitMention, parse_state_block

log = logging.getLogger(__name__)

EXTRACT_TEMPLATE = "information-understanding"
CHECK_TEMPLATE = "rule-check"
_VERDICT_RE = re.compile(r"VERDICT:\s*(pass|fail|unsure)", re.IGNORECASE)


@dataclass(frozen=True)
class UnderstandingConfig:
    delta_match: float = 0.3
    tau: float = 0.5
    max_extraction_rounds: int = 2
    llm_soft_check: bool = False  # ask the extractor to settle checks the rules leave soft

    def __post_init__(self) -> None:
        for name in ("delta_match", "tau"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.max_extraction_rounds < 1:
            raise ValueError("max_extraction_rounds must be positive")


@dataclass
class ValidatedState:
    question: Question
    state: SemanticState
    r_init: list[RelationHypothesis] = field(default_factory=list)
    r_cand: list[RelationHypothesis] = field(default_factory=list)
    scored: list[ScoredRelation] = field(default_factory=list)
    r_high: list[RelationHypothesis] = field(default_factory=list)

    @property
    def fallback(self) -> bool:
        return self.state.fallback

    def trace(self) -> dict[str, Any]:
        return {
            "question_id": self.question.id,
            "state": self.state.to_dict(),
            "R_init": [r.text for r in self.r_init],
            "R_cand": [r.text for r in self.r_cand],
            "scored": [
                {"relation": s.relation.text, "plan": list(s.plan), "checks": list(s.checks), "score": s.score}
                for s in self.scored
            ],
            "R_high": [r.text for r in self.r_high],
            "fallback": self.fallback,
        }


def _fill_unit_dimensions(state: SemanticState, rulebase: RuleBase) -> None:
    state.units = [
        u if u.dimension else UnitMention(u.symbol, rulebase.dimension_of(u.symbol)) for u in state.units
    ]


def extract_semantic_state(
    question: Question,
    schema: DatabaseSchema,
    gateway: Gateway,
    rulebase: RuleBase | None = None,
    config: UnderstandingConfig | None = None,
    *,
    schema_text: str | None = None,
    seed: int = 0,
) -> SemanticState:
    """Ask the extractor for a state block; retry, then fall back to an empty state."""
    from ..schema_link.mschema import render_m_schema

    config = config or UnderstandingConfig()
    slots = {"question": question.text, "schema": schema_text or render_m_schema(schema)}
    for round_ in range(config.max_extraction_rounds):
        params = gateway.default_params(ModelRole.EXTRACTOR, seed=seed + round_)
        completion = gateway.complete(
            ModelRole.EXTRACTOR, EXTRACT_TEMPLATE, slots, params, question_id=question.id
        )
        state = parse_state_block(completion.texts[0])
        if state is not None:
            if rulebase is not None:
                _fill_unit_dimensions(state, rulebase)
            return state
        log.info("question %s: extraction round %d unparseable", question.id, round_ + 1)
    return SemanticState(
        fallback=True,
        warnings=[f"no parseable state block after {config.max_extraction_rounds} rounds"],
    )


def llm_resolver(question: Question, gateway: Gateway, seed: int = 0) -> SoftResolver:
    """Resolve a soft check with one extractor call; gateway errors and unclear replies keep it soft."""

    def resolve(rel: RelationHypothesis, check: str, constraint: Constraint) -> float | None:
        slots = {
            "question": question.text,
            "relation": rel.text + (f" [{rel.implied_unit}]" if rel.implied_unit else ""),
            "constraint": "; ".join(f"{k}={v}" for k, v in sorted(constraint.to_dict().items())),
            "check": check,
        }
        try:
            completion = gateway.complete(
                ModelRole.EXTRACTOR, CHECK_TEMPLATE, slots, gateway.default_params(ModelRole.EXTRACTOR, seed=seed),
                question_id=question.id,
            )
        except GatewayError as exc:
            log.info("question %s: soft check %s kept soft (%s)", question.id, check, exc)
            return None
        m = _VERDICT_RE.search(completion.texts[0])
        if m is None or m.group(1).lower() == "unsure":
            return None
        return PASS if m.group(1).lower() == "pass" else FAIL

    return resolve


def verify_relations(
    relations: list[RelationHypothesis],
    rulebase: RuleBase,
    config: UnderstandingConfig,
    resolve: SoftResolver | None = None,
) -> tuple[list[RelationHypothesis], list[ScoredRelation], list[RelationHypothesis]]:
    """Match, score and filter; returns (R_cand, scored, R_high)."""
    r_cand = [r for r in relations if match_relation(r, rulebase, config.delta_match)]
    scored = [score_relation(r, rulebase, resolve) for r in r_cand]
    return r_cand, scored, filter_high(scored, config.tau)


def run_understanding(
    question: Question,
    schema: DatabaseSchema,
    rulebase: RuleBase,
    config: UnderstandingConfig,
    gateway: Gateway,
    *,
    schema_text: str | None = None,
    seed: int = 0,
) -> ValidatedState:
    state = extract_semantic_state(
        question, schema, gateway, rulebase, config, schema_text=schema_text, seed=seed
    )
    r_init = list(state.relations)
    resolve = llm_resolver(question, gateway, seed) if config.llm_soft_check else None
    r_cand, scored, r_high = verify_relations(r_init, rulebase, config, resolve)
    return ValidatedState(question, state, r_init, r_cand, scored, r_high)
