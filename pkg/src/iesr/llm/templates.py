"""Prompt templates for the extractor, reasoner and discriminator roles.

Slots use ``{name}`` syntax; literal braces are written ``{{`` / ``}}``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field


class TemplateError(KeyError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    system: str = "You are a careful assistant for converting questions into SQLite SQL."
    required_slots: frozenset[str] = field(default=frozenset())

    def __post_init__(self) -> None:
        found = frozenset(name for _, name, _, _ in string.Formatter().parse(self.body) if name)
        if not self.required_slots:
            object.__setattr__(self, "required_slots", found)
        elif found - self.required_slots:
            raise ValueError(f"template {self.template_id!r} uses undeclared slots {sorted(found - self.required_slots)}")

    def render(self, slots: dict[str, str]) -> str:
        missing = sorted(self.required_slots - slots.keys())
        if missing:
            raise TemplateError(f"template {self.template_id!r}: missing slot {missing[0]!r}")
        return self.body.format_map({k: str(v) for k, v in slots.items()})


_STATE_BLOCK = """Answer with one fenced block exactly in this shape (omit lines you cannot fill):
```state
INTENT: <what the user wants>
RATIONALE: <one line of reasoning>
ENTITIES:
- <surface form> | <table.column or blank>
RELATIONS:
- <subject> | <predicate> | <object> | unit=<unit> | formula=<formula>
NUMBERS:
- <value> | <source text>
UNITS:
- <unit symbol> | <dimension>
PATTERNS:
- <table.column>
```"""

_SQL_TAIL = "Return the final query in a fenced ```sql block."

_BODIES = {
    "information-understanding": (
        "Question: {question}\n\nDatabase schema:\n{schema}\n\n"
        "Extract the intent, entities, relations between quantities, numbers, units "
        "and schema fields the question needs. Keep uncertain hypotheses.\n" + _STATE_BLOCK
    ),
    "rule-check": (
        "Question: {question}\n\nCandidate relation: {relation}\nRule: {constraint}\n"
        "Check: {check}\n\n"
        "The deterministic check was inconclusive. Decide whether the relation satisfies the rule "
        "for this check. Answer with one line: VERDICT: pass | fail | unsure"
    ),
    "equation-explain": (
        "Question: {question}\n\nSchema:\n{schema}\n\nVerified hints:\n{hints}\n\n"
        "Progress so far:\n{history}\n\n"
        "Write out every formula, unit conversion and numeric transformation the SQL must "
        "implement, one per line, as FORMULA: <expression>."
    ),
    "schema-selection": (
        "Question: {question}\n\nSchema:\n{schema}\n\nVerified hints:\n{hints}\n\n"
        "Progress so far:\n{history}\n\n"
        "Select the tables and columns needed.\nTABLES: <t1>, <t2>\nCOLUMNS: <t.c>, <t.c>"
    ),
    "identify-column": (
        "Question: {question}\n\nSchema:\n{schema}\n\nVerified hints:\n{hints}\n\n"
        "Progress so far:\n{history}\n\n"
        "Resolve ambiguous column references. One per line: COLUMN: <table.column> | <meaning>"
    ),
    "entity-extraction": (
        "Question: {question}\n\nSchema:\n{schema}\n\nVerified hints:\n{hints}\n\n"
        "Progress so far:\n{history}\n\n"
        "Ground each entity to a value or schema element. One per line: ENTITY: <surface> | <table.column> | <value>"
    ),
    "sql-generation": (
        "Question: {question}\n\nSchema:\n{schema}\n\nVerified hints:\n{hints}\n\n"
        "Progress so far:\n{history}\n\n"
        "Write one SQLite query answering the question, with the joins, aggregations and "
        "nesting it needs. " + _SQL_TAIL
    ),
    "sql-revision": (
        "Question: {question}\n\nSchema:\n{schema}\n\nVerified hints:\n{hints}\n\n"
        "Progress so far:\n{history}\n\nDraft SQL:\n```sql\n{draft_sql}\n```\n"
        "Execution feedback: {feedback}\n\n"
        "List the known conditions, formulas, units and key fields, check the draft against "
        "them, and fix logical, join or schema errors. " + _SQL_TAIL
    ),
    "discriminator-completion": (
        "Question: {question}\n\nSchema:\n{schema}\n\n"
        "Partial reasoning (later steps removed):\n{prefix}\n\n"
        "Continue the reasoning and produce the SQL query. " + _SQL_TAIL
    ),
}

DEFAULT_TEMPLATES: dict[str, PromptTemplate] = {tid: PromptTemplate(tid, body) for tid, body in _BODIES.items()}


class TemplateRegistry:
    def __init__(self, templates: dict[str, PromptTemplate] | None = None):
        self._templates = dict(DEFAULT_TEMPLATES if templates is None else templates)

    def register(self, template: PromptTemplate) -> None:
        self._templates[template.template_id] = template

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise TemplateError(f"unknown template {template_id!r}") from None

    def render(self, template_id: str, slots: dict[str, str]) -> str:
        return self.get(template_id).render(slots)

    def __contains__(self, template_id: str) -> bool:
        return template_id in self._templates


_DEFAULT_REGISTRY = TemplateRegistry()


def render_template(template_id: str, slots: dict[str, str], registry: TemplateRegistry | None = None) -> str:
    return (registry or _DEFAULT_REGISTRY).render(template_id, slots)
