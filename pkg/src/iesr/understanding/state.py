"""Semantic state extracted from a question, and the parser for the extractor's block.

Block grammar (version 1), optionally inside a ```state fence::

    INTENT: <text>
    RATIONALE: <text>
    ENTITIES:
    - <surface> | <table.column>
    RELATIONS:
    - <subject> | <predicate> | <object> | unit=<unit> | formula=<formula> | reflexive
    NUMBERS:
    - <value> | <source span>
    UNITS:
    - <symbol> | <dimension>
    PATTERNS:
    - <table.column>

List sections also accept items separated by ``;`` on the label line.
"""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass, field
from typing import Any

log = logging.getLogger(__name__)

BLOCK_VERSION = 1
_SCALAR = ("INTENT", "RATIONALE")
_LISTS = ("ENTITIES", "RELATIONS", "NUMBERS", "UNITS", "PATTERNS")
_LABEL_RE = re.compile(r"^\s*(INTENT|RATIONALE|ENTITIES|RELATIONS|NUMBERS|UNITS|PATTERNS)\s*:\s*(.*)$", re.I)
_FENCE_RE = re.compile(r"```[a-zA-Z_-]*\n(.*?)```", re.S)


@dataclass(frozen=True)
class Entity:
    surface: str
    mention: str | None = None


@dataclass(frozen=True)
class RelationHypothesis:
    subject: str
    predicate: str
    object: str
    implied_unit: str | None = None
    implied_formula: str | None = None
    reflexive: bool = False

    def __post_init__(self) -> None:
        if not self.reflexive and self.subject.strip().lower() == self.object.strip().lower():
            raise ValueError("relation subject equals object without reflexive mark")

    @property
    def text(self) -> str:
        return " ".join(p for p in (self.subject, self.predicate, self.object, self.implied_formula or "") if p)


@dataclass(frozen=True)
class NumericExpr:
    value: float | int
    span: str = ""


@dataclass(frozen=True)
class UnitMention:
    symbol: str
    dimension: str | None = None


@dataclass
class SemanticState:
    intent: str = ""
    rationale: str = ""
    entities: list[Entity] = field(default_factory=list)
    relations: list[RelationHypothesis] = field(default_factory=list)
    numerics: list[NumericExpr] = field(default_factory=list)
    units: list[UnitMention] = field(default_factory=list)
    patterns: list[str] = field(default_factory=list)
    fallback: bool = False
    warnings: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.intent or self.entities or self.relations or self.numerics or self.units or self.patterns)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> SemanticState:
        return cls(
            intent=raw.get("intent", ""),
            rationale=raw.get("rationale", ""),
            entities=[Entity(**e) for e in raw.get("entities", [])],
            relations=[RelationHypothesis(**r) for r in raw.get("relations", [])],
            numerics=[NumericExpr(**n) for n in raw.get("numerics", [])],
            units=[UnitMention(**u) for u in raw.get("units", [])],
            patterns=list(raw.get("patterns", [])),
            fallback=bool(raw.get("fallback", False)),
            warnings=list(raw.get("warnings", [])),
        )


def _parse_number(text: str) -> int | float:
    cleaned = text.strip().replace(",", "")
    try:
        return int(cleaned)
    except ValueError:
        return float(cleaned)


def _fields(item: str) -> list[str]:
    return [p.strip() for p in item.split("|")]


def _parse_relation(item: str) -> RelationHypothesis:
    parts = _fields(item)
    if len(parts) < 3 or not parts[0] or not parts[1]:
        raise ValueError("relation needs subject | predicate | object")
    unit = formula = None
    reflexive = False
    for extra in parts[3:]:
        key, _, value = extra.partition("=")
        key = key.strip().lower()
        if key == "unit" and value.strip():
            unit = value.strip()
        elif key == "formula" and value.strip():
            formula = value.strip()
        elif key == "reflexive":
            reflexive = True
    return RelationHypothesis(parts[0], parts[1], parts[2], unit, formula, reflexive)


def _block_text(response: str) -> str | None:
    for body in _FENCE_RE.findall(response):
        if any(_LABEL_RE.match(line) for line in body.splitlines()):
            return body
    if any(_LABEL_RE.match(line) for line in response.splitlines()):
        return response
    return None


def parse_state_block(response: str) -> SemanticState | None:
    """Parse the extractor's structured block; None when no labelled block is present.

    Malformed items are dropped and reported in ``warnings``.
    """
    body = _block_text(response)
    if body is None:
        return None
    sections: dict[str, list[str]] = {k: [] for k in _LISTS}
    scalars: dict[str, str] = {}
    current: str | None = None
    for line in body.splitlines():
        m = _LABEL_RE.match(line)
        if m:
            label, rest = m.group(1).upper(), m.group(2).strip()
            if label in _SCALAR:
                scalars[label] = rest
                current = None
            else:
                current = label
                sections[label].extend(p.strip() for p in rest.split(";") if p.strip())
            continue
        stripped = line.strip()
        if current and stripped.startswith(("-", "*")):
            item = stripped[1:].strip()
            if item:
                sections[current].append(item)

    state = SemanticState(intent=scalars.get("INTENT", ""), rationale=scalars.get("RATIONALE", ""))
    for item in sections["ENTITIES"]:
        parts = _fields(item)
        if parts[0]:
            state.entities.append(Entity(parts[0], parts[1] if len(parts) > 1 and parts[1] else None))
    for item in sections["RELATIONS"]:
        try:
            state.relations.append(_parse_relation(item))
        except ValueError as exc:
            state.warnings.append(f"relation dropped ({exc}): {item}")
    for item in sections["NUMBERS"]:
        parts = _fields(item)
        try:
            state.numerics.append(NumericExpr(_parse_number(parts[0]), parts[1] if len(parts) > 1 else ""))
        except ValueError:
            state.warnings.append(f"number dropped: {item}")
    for item in sections["UNITS"]:
        parts = _fields(item)
        if parts[0]:
            state.units.append(UnitMention(parts[0], parts[1] if len(parts) > 1 and parts[1] else None))
    for item in sections["PATTERNS"]:
        if item:
            state.patterns.append(item)

    known = {e.surface.lower() for e in state.entities}
    for rel in state.relations:
        if rel.subject.lower() not in known:
            state.entities.append(Entity(rel.subject))
            known.add(rel.subject.lower())
    for w in state.warnings:
        log.debug("state parse: %s", w)
    return state


def render_state_block(state: SemanticState) -> str:
    """Inverse of :func:`parse_state_block` (used to build scripted fixtures)."""
    lines = ["```state", f"INTENT: {state.intent}", f"RATIONALE: {state.rationale}", "ENTITIES:"]
    lines += [f"- {e.surface} | {e.mention or ''}" for e in state.entities]
    lines.append("RELATIONS:")
    for r in state.relations:
        item = f"- {r.subject} | {r.predicate} | {r.object}"
        if r.implied_unit:
            item += f" | unit={r.implied_unit}"
        if r.implied_formula:
            item += f" | formula={r.implied_formula}"
        if r.reflexive:
            item += " | reflexive"
        lines.append(item)
    lines.append("NUMBERS:")
    lines += [f"- {n.value} | {n.span}" for n in state.numerics]
    lines.append("UNITS:")
    lines += [f"- {u.symbol} | {u.dimension or ''}" for u in state.units]
    lines.append("PATTERNS:")
    lines += [f"- {p}" for p in state.patterns]
    lines.append("```")
    return "\n".join(lines)
