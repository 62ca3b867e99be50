"""Reasoning actions, the per-path reasoning state, and response parsers."""

from __future__ import annotations

import enum
import re
from collections.abc import Iterable
from dataclasses import dataclass, field, replace


class ActionKind(str, enum.Enum):
    A1 = "A1"  # equation analysis
    A2 = "A2"  # schema selection
    A3 = "A3"  # identify columns
    A4 = "A4"  # entity extraction
    A5 = "A5"  # SQL generation
    A6 = "A6"  # SQL revision


STOP = "STOP"
ALL_ACTIONS: tuple[ActionKind, ...] = tuple(ActionKind)
ONCE_ACTIONS = (ActionKind.A1, ActionKind.A2, ActionKind.A3, ActionKind.A4)

TEMPLATE_FOR: dict[ActionKind, str] = {
    ActionKind.A1: "equation-explain",
    ActionKind.A2: "schema-selection",
    ActionKind.A3: "identify-column",
    ActionKind.A4: "entity-extraction",
    ActionKind.A5: "sql-generation",
    ActionKind.A6: "sql-revision",
}
SQL_ACTIONS = (ActionKind.A5, ActionKind.A6)

_SQL_FENCE = re.compile(r"```sql\s*\n(.*?)```", re.S | re.I)
_ANY_FENCE = re.compile(r"```[a-zA-Z]*\s*\n(.*?)```", re.S)
_SQL_START = re.compile(r"^\s*(select|with)\b", re.I)


def parse_sql(text: str) -> str | None:
    """The last ```sql fenced block (or last bare fence that starts a query)."""
    blocks = _SQL_FENCE.findall(text)
    if not blocks:
        blocks = [b for b in _ANY_FENCE.findall(text) if _SQL_START.match(b)]
    if not blocks:
        return None
    sql = blocks[-1].strip().rstrip(";").strip()
    return sql or None


def _label_values(text: str, label: str) -> list[str]:
    out: list[str] = []
    for line in text.splitlines():
        m = re.match(rf"^\s*{label}\s*:\s*(.*)$", line, re.I)
        if m:
            out.extend(v.strip() for v in m.group(1).split(",") if v.strip())
    return out


def parse_schema_selection(text: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    return tuple(_label_values(text, "TABLES")), tuple(_label_values(text, "COLUMNS"))


def _pipe_items(text: str, label: str) -> list[tuple[str, ...]]:
    out = []
    for line in text.splitlines():
        m = re.match(rf"^\s*{label}\s*:\s*(.*)$", line, re.I)
        if m:
            out.append(tuple(p.strip() for p in m.group(1).split("|")))
    return out


def parse_columns(text: str) -> tuple[tuple[str, str], ...]:
    return tuple((p[0], p[1] if len(p) > 1 else "") for p in _pipe_items(text, "COLUMN") if p[0])


def parse_entities(text: str) -> tuple[tuple[str, str, str], ...]:
    items = []
    for p in _pipe_items(text, "ENTITY"):
        if p[0]:
            padded = (*p, "", "")
            items.append((padded[0], padded[1], padded[2]))
    return tuple(items)


@dataclass(frozen=True)
class Step:
    action: ActionKind
    template_id: str
    slots: dict[str, str] = field(compare=False, repr=False)
    output: str = ""
    sql: str | None = None

    def summary(self) -> dict:
        return {"action": self.action.value, "template": self.template_id, "output": self.output, "sql": self.sql}


@dataclass(frozen=True)
class ReasoningState:
    """Accumulated artifacts along one root-to-node path."""

    question: str
    schema_doc: str
    hints: str = ""
    equation_analysis: str = ""
    selected_tables: tuple[str, ...] = ()
    selected_columns: tuple[str, ...] = ()
    columns: tuple[tuple[str, str], ...] = ()
    entities: tuple[tuple[str, str, str], ...] = ()
    draft_sql: str | None = None
    revisions: tuple[str, ...] = ()
    steps: tuple[Step, ...] = ()
    stopped: bool = False
    degenerate: bool = False

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def taken(self) -> frozenset[ActionKind]:
        return frozenset(s.action for s in self.steps)

    def history(self, steps: Iterable[Step] | None = None) -> str:
        return render_history(self.steps if steps is None else steps)

    def sql_step(self) -> Step | None:
        for step in reversed(self.steps):
            if step.action in SQL_ACTIONS:
                return step
        return None


def render_history(steps: Iterable[Step]) -> str:
    lines = []
    for k, step in enumerate(steps, 1):
        body = step.output.strip().replace("\n", "\n   ")
        lines.append(f"{k}. [{step.action.value}] {body}")
    return "\n".join(lines) if lines else "(none)"


def valid_actions(
    state: ReasoningState, d_max: int, enabled: frozenset[ActionKind] | None = None
) -> list[ActionKind | str]:
    """Gated action list; an empty list means the path ended by exhaustion.

    A1-A4 at most once per path, A5 after A2 (when A2 is enabled), A6 after
    A5. With SQL present the choices are revise or stop; at ``d_max - 1``
    only the SQL-producing step or revise/stop remain.
    """
    enabled = frozenset(ALL_ACTIONS) if enabled is None else enabled
    if state.stopped or state.degenerate or state.depth >= d_max:
        return []
    has_sql = state.draft_sql is not None
    a5_ready = ActionKind.A5 in enabled and (ActionKind.A2 in state.taken or ActionKind.A2 not in enabled)
    if has_sql:
        return ([ActionKind.A6] if ActionKind.A6 in enabled else []) + [STOP]
    if state.depth == d_max - 1:
        return [ActionKind.A5] if a5_ready else []
    out: list[ActionKind | str] = [a for a in ONCE_ACTIONS if a in enabled and a not in state.taken]
    if a5_ready:
        out.append(ActionKind.A5)
    return out


def action_slots(state: ReasoningState, action: ActionKind, feedback: str = "") -> dict[str, str]:
    slots = {
        "question": state.question,
        "schema": state.schema_doc,
        "hints": state.hints or "(none)",
        "history": state.history(),
    }
    if action is ActionKind.A6:
        slots["draft_sql"] = state.draft_sql or ""
        slots["feedback"] = feedback or "(none)"
    return slots


def apply_action(state: ReasoningState, action: ActionKind, slots: dict[str, str], output: str) -> ReasoningState:
    """Child state after ``action`` produced ``output``."""
    sql = parse_sql(output) if action in SQL_ACTIONS else None
    step = Step(action, TEMPLATE_FOR[action], dict(slots), output, sql)
    steps = state.steps + (step,)
    if action is ActionKind.A1:
        return replace(state, steps=steps, equation_analysis=output.strip())
    if action is ActionKind.A2:
        tables, cols = parse_schema_selection(output)
        return replace(state, steps=steps, selected_tables=tables, selected_columns=cols)
    if action is ActionKind.A3:
        return replace(state, steps=steps, columns=parse_columns(output))
    if action is ActionKind.A4:
        return replace(state, steps=steps, entities=parse_entities(output))
    if sql is None:
        return replace(state, steps=steps, draft_sql=None, degenerate=True)
    revisions = state.revisions + ((sql,) if action is ActionKind.A6 else ())
    return replace(state, steps=steps, draft_sql=sql, revisions=revisions)


def stop(state: ReasoningState) -> ReasoningState:
    return replace(state, stopped=True)


def is_terminal(state: ReasoningState, d_max: int) -> bool:
    """Holds SQL and either chose to stop or reached the depth limit."""
    return state.draft_sql is not None and not state.degenerate and (state.stopped or state.depth >= d_max)
