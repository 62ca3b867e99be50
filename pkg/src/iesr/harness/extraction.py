"""Precision and recall of extracted schema items, units/numbers and operators."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..understanding.state import SemanticState

FIELDS = ("table", "column", "unit_num", "operator")

UNIT_ALIASES = {
    "kilometer": "km", "kilometers": "km", "kilometre": "km", "kilometres": "km", "kms": "km",
    "meter": "m", "meters": "m", "metre": "m", "metres": "m",
    "hour": "h", "hours": "h", "hr": "h", "hrs": "h",
    "minute": "min", "minutes": "min", "mins": "min",
    "second": "s", "seconds": "s", "sec": "s", "secs": "s",
    "kilogram": "kg", "kilograms": "kg", "kgs": "kg",
    "kilowatt hour": "kwh", "kilowatt hours": "kwh", "kilowatt-hour": "kwh",
    "watt": "w", "watts": "w", "kilowatt": "kw", "kilowatts": "kw",
    "km/hr": "km/h", "kph": "km/h", "kmh": "km/h",
    "dollar": "usd", "dollars": "usd", "$": "usd",
}
OPERATOR_ALIASES = {
    "+": "add", "plus": "add", "addition": "add",
    "-": "subtract", "minus": "subtract", "subtraction": "subtract", "difference": "subtract",
    "*": "multiply", "times": "multiply", "product": "multiply",
    "/": "divide", "ratio": "divide", "per": "divide", "quotient": "divide",
    "^": "power", "**": "power",
    "average": "avg", "mean": "avg", "avg": "avg",
    "total": "sum", "sum": "sum",
    "count": "count", "how many": "count", "number of": "count",
    "maximum": "max", "highest": "max", "largest": "max", "max": "max",
    "minimum": "min", "lowest": "min", "smallest": "min", "min": "min",
}
_FORMULA_OPS = re.compile(r"\*\*|[-+*/^]")
_INTENT_OPS = re.compile(
    r"\b(average|mean|avg|total|sum|count|how many|number of|maximum|highest|largest|max|minimum|lowest|smallest|min)\b"
)


def canonical_unit(unit: str) -> str:
    u = " ".join(unit.strip().lower().split())
    return UNIT_ALIASES.get(u, u)


def canonical_number(value: Any) -> str:
    x = float(value)
    return str(int(x)) if x.is_integer() else repr(x)


def canonical_operator(op: str) -> str:
    o = " ".join(op.strip().lower().split())
    return OPERATOR_ALIASES.get(o, o)


def canonical(field_name: str, item: Any) -> str:
    if field_name == "operator":
        return canonical_operator(str(item))
    if field_name == "unit_num":
        try:
            return canonical_number(item)
        except (TypeError, ValueError):
            return canonical_unit(str(item))
    return str(item).strip().lower()


def predicted_items(state: SemanticState) -> dict[str, set[str]]:
    refs = [e.mention for e in state.entities if e.mention] + list(state.patterns)
    tables, columns = set(), set()
    for ref in refs:
        ref = ref.strip().lower()
        if "." in ref:
            t, _, c = ref.partition(".")
            tables.add(t)
            columns.add(f"{t}.{c}")
        elif ref:
            tables.add(ref)
    unit_num = {canonical_number(n.value) for n in state.numerics}
    unit_num |= {canonical_unit(u.symbol) for u in state.units}
    ops = set()
    for rel in state.relations:
        if rel.implied_formula:
            ops |= {canonical_operator(o) for o in _FORMULA_OPS.findall(rel.implied_formula.split("=")[-1])}
    ops |= {canonical_operator(m) for m in _INTENT_OPS.findall(state.intent.lower())}
    return {"table": tables, "column": columns, "unit_num": unit_num, "operator": ops}


@dataclass
class FieldPR:
    precision: float
    recall: float
    tp: int
    n_pred: int
    n_gold: int
    flags: list[str] = field(default_factory=list)


def set_pr(pred: set[str], gold: set[str]) -> FieldPR:
    tp = len(pred & gold)
    flags = []
    if pred:
        precision = tp / len(pred)
    else:
        precision = 0.0
        flags.append("empty_prediction")
    if gold:
        recall = tp / len(gold)
    else:
        recall = 1.0
        flags.append("empty_gold")
    return FieldPR(precision, recall, tp, len(pred), len(gold), flags)


def extraction_pr(predicted: SemanticState, gold: dict[str, list[Any]]) -> tuple[dict[str, FieldPR], list[str]]:
    """Per-field P/R for one question; fields absent from ``gold`` are skipped."""
    pred = predicted_items(predicted)
    out: dict[str, FieldPR] = {}
    diagnostics: list[str] = []
    for name in FIELDS:
        if name not in gold:
            diagnostics.append(f"gold has no {name!r} field; skipped")
            continue
        out[name] = set_pr(pred[name], {canonical(name, g) for g in gold[name]})
    return out, diagnostics


def dataset_pr(states: dict[str, SemanticState], gold: dict[str, dict[str, list[Any]]]) -> dict[str, Any]:
    """Micro-averaged P/R per field over all annotated questions."""
    totals = {f: {"tp": 0, "n_pred": 0, "n_gold": 0} for f in FIELDS}
    diagnostics: list[str] = []
    for qid in sorted(gold):
        if qid not in states:
            diagnostics.append(f"{qid}: no predicted state")
            state = SemanticState()
        else:
            state = states[qid]
        per, diags = extraction_pr(state, gold[qid])
        diagnostics += [f"{qid}: {d}" for d in diags]
        for name, pr in per.items():
            totals[name]["tp"] += pr.tp
            totals[name]["n_pred"] += pr.n_pred
            totals[name]["n_gold"] += pr.n_gold
    fields = {}
    for name, t in totals.items():
        fields[name] = {
            "precision": t["tp"] / t["n_pred"] if t["n_pred"] else 0.0,
            "recall": t["tp"] / t["n_gold"] if t["n_gold"] else 0.0,
            **t,
        }
    return {"fields": fields, "questions": len(gold), "diagnostics": diagnostics}


def load_states(run_dir: Path | str) -> dict[str, SemanticState]:
    """Predicted states from a run directory's understanding traces."""
    out = {}
    for path in sorted(Path(run_dir).glob("traces/*/understanding.json")):
        trace = json.loads(path.read_text(encoding="utf-8"))
        out[trace["question_id"]] = SemanticState.from_dict(trace["state"])
    return out
