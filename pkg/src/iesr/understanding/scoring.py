"""Relation matching against the rule base and soft consistency scoring."""

from __future__ import annotations

import re
from collections.abc import Callable
from dataclasses import dataclass

from .dimensions import equation_variables
from .rules import Constraint, RuleBase, UnitSpec, default_rulebase
from .state import RelationHypothesis

W_LEX = 0.6
W_UNIT = 0.4

PASS, SOFT, FAIL = 1.0, 0.5, 0.0

# (relation, check name, constraint) -> PASS, FAIL, or None to keep SOFT
SoftResolver = Callable[[RelationHypothesis, str, Constraint], "float | None"]

_STOP = frozenset({"the", "a", "an", "of", "in", "to", "for", "is", "are", "by", "and", "per", "with", "on", "at"})
_TOKEN_RE = re.compile(r"[a-z]+|\d+(?:\.\d+)?")


def tokens(text: str) -> frozenset[str]:
    return frozenset(t for t in _TOKEN_RE.findall((text or "").lower()) if t not in _STOP)


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def unit_compat(unit: str, spec: UnitSpec, rulebase: RuleBase) -> float:
    dim = rulebase.dimension_of(unit)
    if dim is None or dim != spec.dimension:
        return 0.0
    if any(rulebase.convertible(unit, u) for u in spec.units):
        return 1.0
    return 0.5


def similarity(
    rel: RelationHypothesis, uni: UnitSpec | None, equt: str, rulebase: RuleBase | None = None
) -> float:
    """0.6 * token Jaccard(relation, equation) + 0.4 * unit compatibility.

    The unit term is dropped (lexical weight becomes 1) when the relation has
    no implied unit or the constraint has no unit facet.
    """
    lex = jaccard(tokens(rel.text), tokens(equt))
    if not rel.implied_unit or uni is None:
        return lex
    rulebase = rulebase or default_rulebase()
    return W_LEX * lex + W_UNIT * unit_compat(rel.implied_unit, uni, rulebase)


def best_constraint(rel: RelationHypothesis, rulebase: RuleBase) -> tuple[int, float]:
    """Index and similarity of the best-matching constraint (first on ties); (-1, 0.0) if none."""
    best, best_sim = -1, 0.0
    for j, c in enumerate(rulebase.constraints):
        sim = similarity(rel, c.unit, c.equation, rulebase)
        if best < 0 or sim > best_sim:
            best, best_sim = j, sim
    return best, best_sim


def match_relation(rel: RelationHypothesis, rulebase: RuleBase, delta_match: float) -> bool:
    return any(similarity(rel, c.unit, c.equation, rulebase) > delta_match for c in rulebase.constraints)


@dataclass(frozen=True)
class ScoredRelation:
    relation: RelationHypothesis
    plan: tuple[str, ...]
    score: float
    checks: tuple[float, ...] = ()
    constraint_index: int = -1

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("score out of [0, 1]")


def plan_checks(constraint: Constraint) -> tuple[str, ...]:
    plan: list[str] = []
    if constraint.entity_classes:
        plan.append("entity_class")
    if constraint.unit is not None:
        plan.append("unit_dimension")
        if constraint.unit.units:
            plan.append("conversion_path")
    if constraint.equation.strip():
        plan.append("formula_signature")
    return tuple(plan)


def _check_entity_class(rel: RelationHypothesis, c: Constraint) -> float:
    classes = frozenset().union(*(tokens(t) for t in c.entity_classes))
    if tokens(rel.subject) & classes:
        return PASS
    if tokens(rel.object) & classes:
        return SOFT
    return FAIL


def _check_unit_dimension(rel: RelationHypothesis, c: Constraint, rb: RuleBase) -> float:
    dim = rb.dimension_of(rel.implied_unit)
    if dim is None:
        return SOFT
    return PASS if dim == c.unit.dimension else FAIL


def _check_conversion(rel: RelationHypothesis, c: Constraint, rb: RuleBase) -> float:
    if not rel.implied_unit:
        return SOFT
    if any(rb.convertible(rel.implied_unit, u) for u in c.unit.units):
        return PASS
    return SOFT if rb.dimension_of(rel.implied_unit) == c.unit.dimension else FAIL


def _check_formula(rel: RelationHypothesis, c: Constraint, rb: RuleBase) -> float:
    if not rel.implied_formula:
        return SOFT
    formula = rb.formula_for(c.equation)
    expected = formula.variable_names if formula else frozenset(equation_variables(c.equation))
    got = frozenset(equation_variables(rel.implied_formula))
    if not expected or not got:
        return SOFT
    if got == expected:
        return PASS
    overlap = len(got & expected) / len(expected)
    return SOFT if overlap >= 0.5 else FAIL


def execute_plan(
    rel: RelationHypothesis, plan: tuple[str, ...], c: Constraint, rb: RuleBase, resolve: SoftResolver | None = None
) -> tuple[float, ...]:
    """Run each check; ``resolve`` may turn a soft outcome into pass or fail."""
    out = []
    for step in plan:
        if step == "entity_class":
            out.append(_check_entity_class(rel, c))
        elif step == "unit_dimension":
            out.append(_check_unit_dimension(rel, c, rb))
        elif step == "conversion_path":
            out.append(_check_conversion(rel, c, rb))
        elif step == "formula_signature":
            out.append(_check_formula(rel, c, rb))
        else:
            raise ValueError(f"unknown check {step!r}")
        if out[-1] == SOFT and resolve is not None:
            verdict = resolve(rel, step, c)
            if verdict is not None:
                out[-1] = verdict
    return tuple(out)


def score_relation(
    rel: RelationHypothesis, rulebase: RuleBase, resolve: SoftResolver | None = None
) -> ScoredRelation:
    """Plan facet checks from the best-matching constraint and average their outcomes."""
    j, _ = best_constraint(rel, rulebase)
    if j < 0:
        return ScoredRelation(rel, (), 0.0)
    constraint = rulebase.constraints[j]
    plan = plan_checks(constraint)
    checks = execute_plan(rel, plan, constraint, rulebase, resolve)
    score = sum(checks) / len(checks) if checks else 0.0
    return ScoredRelation(rel, plan, score, checks, j)


def filter_high(scored: list[ScoredRelation], tau: float) -> list[RelationHypothesis]:
    return [s.relation for s in scored if s.score > tau]

