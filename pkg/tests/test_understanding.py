from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iesr.core.dataset import introspect_schema
from iesr.core.types import Question
from iesr.understanding.dimensions import DimensionError, check_equation
from iesr.understanding.pipeline import UnderstandingConfig, extract_semantic_state, run_understanding, verify_relations
from iesr.understanding.rules import Constraint, RuleBase, RuleBaseError, UnitSpec, default_rulebase
from iesr.understanding.scoring import (
    ScoredRelation,
    filter_high,
    jaccard,
    match_relation,
    score_relation,
    similarity,
    tokens,
)
from iesr.understanding.state import (
    Entity,
    NumericExpr,
    RelationHypothesis,
    SemanticState,
    UnitMention,
    parse_state_block,
    render_state_block,
)

from conftest import scripted

import oracles

RB = default_rulebase()
SPEED = UnitSpec("speed", ("m/s", "km/h"))


def rel(s, p, o, unit=None, formula=None):
    return RelationHypothesis(s, p, o, unit, formula)


# -- similarity ---------------------------------------------------------------

def test_similarity_extremes():
    r = rel("speed", "equals", "distance", "km/h")
    assert similarity(r, SPEED, "speed equals distance", RB) == pytest.approx(1.0)
    r2 = rel("cost", "of", "apples", "kg")
    assert similarity(r2, SPEED, "speed equals distance", RB) == 0.0


def test_similarity_linear_combination():
    r = rel("speed", "over", "distance", "m/s")
    equt = "speed over time"
    assert jaccard(tokens(r.text), tokens(equt)) == pytest.approx(0.5)
    assert similarity(r, SPEED, equt, RB) == pytest.approx(0.6 * 0.5 + 0.4 * 1.0)


def test_similarity_unit_terms():
    r = rel("speed", "over", "distance", "knot")
    rb = RuleBase(units={"knot": "speed", "m/s": "speed"})
    # same dimension, no conversion path
    assert similarity(r, SPEED, "speed over time", rb) == pytest.approx(0.6 * 0.5 + 0.4 * 0.5)
    # no implied unit: lexical weight renormalized to 1
    assert similarity(rel("speed", "over", "distance"), SPEED, "speed over time", RB) == pytest.approx(0.5)


def test_match_threshold_is_strict():
    r = rel("speed", "over", "distance")
    rb = RB.with_constraints([Constraint(equation="speed over time")])  # sim exactly 0.5
    assert match_relation(r, rb, 0.3)
    assert not match_relation(r, rb, 0.5)
    r_full = rel("speed", "over", "distance", "km/h")
    rb7 = RB.with_constraints([Constraint(unit=SPEED, equation="speed over time")])  # 0.7
    assert match_relation(r_full, rb7, 0.5)


def test_match_empty_rulebase():
    assert not match_relation(rel("a", "b", "c"), RuleBase.empty(), 0.0)


# -- scoring --------------------------------------------------------------------

def test_score_all_pass():
    r = rel("distance", "divided by", "time", "km/h", "speed = distance / time")
    s = score_relation(r, RB)
    assert s.plan == ("entity_class", "unit_dimension", "conversion_path", "formula_signature")
    assert s.score == 1.0


def test_score_mixed_checks():
    rb = RuleBase(
        constraints=[Constraint(frozenset({"trip"}), UnitSpec("speed", ("knot",)), "speed = distance / time")],
        units={"km/h": "speed", "knot": "speed"},
    )
    r = rel("trip", "has", "pace", "km/h", "power = energy / time")
    s = score_relation(r, rb)
    # entity pass, dimension pass, conversion soft, formula fail
    assert s.checks == (1.0, 1.0, 0.5, 0.0)
    assert s.score == pytest.approx(0.625)


def test_score_unit_only_constraint():
    rb = RuleBase(constraints=[Constraint(unit=UnitSpec("speed"))], units={"km/h": "speed"})
    s = score_relation(rel("trip", "at", "pace", "km/h"), rb)
    assert s.plan == ("unit_dimension",) and s.score == 1.0


def test_score_bounds_enforced():
    with pytest.raises(ValueError):
        ScoredRelation(rel("a", "b", "c"), (), 1.5)


def _scored(values):
    return [ScoredRelation(rel(f"s{i}", "p", "o"), ("unit_dimension",), v) for i, v in enumerate(values)]


def test_filter_high_examples():
    scored = _scored([0.3, 0.6, 0.9])
    assert [r.subject for r in filter_high(scored, 0.5)] == ["s1", "s2"]
    assert filter_high(scored, 1.0) == []
    assert len(filter_high(scored, 0.0)) == 3


# -- rule base ----------------------------------------------------------------

def test_rulebase_conversion_symmetry():
    for (a, b), f in RB.conversions.items():
        assert RB.conversions[(b, a)] == pytest.approx(1.0 / f)
    assert RB.conversion_factor("km", "m") == pytest.approx(1000.0)
    assert RB.conversion_factor("m", "km") == pytest.approx(0.001)


def test_rulebase_rejects_bad_input():
    with pytest.raises(RuleBaseError):
        Constraint()
    with pytest.raises(RuleBaseError):
        RuleBase(units={"km": "length", "s": "time"}, conversions={("km", "s"): 2.0})
    with pytest.raises(RuleBaseError):
        RuleBase.from_dict({
            "units": {"km": "length", "m": "length"},
            "conversions": [{"from": "km", "to": "m", "factor": 1000}, {"from": "m", "to": "km", "factor": 0.5}],
        })
    with pytest.raises(RuleBaseError):
        RuleBase.from_dict({"formulas": [{"name": "bad", "expression": "speed = distance * time",
                                          "variables": {"speed": "speed", "distance": "length", "time": "time"}}]})


def test_dimension_check():
    check_equation("speed = distance / time", {"speed": "speed", "distance": "length", "time": "time"})
    with pytest.raises(DimensionError):
        check_equation("energy = mass * speed", {"energy": "energy", "mass": "mass", "speed": "speed"})


# -- extraction ---------------------------------------------------------------

def _question(text="how fast?"):
    return Question("q1", text, "shop")


def _gw(responses):
    return scripted([{"template": "information-understanding", "responses": responses}])


def test_extraction_parser_identity(shop_db):
    state = SemanticState(
        intent="rank items", rationale="by price",
        entities=[Entity("items", "items"), Entity("price")],
        relations=[rel("items", "priced at", "price", "USD")],
        numerics=[NumericExpr(3, "three")],
        units=[UnitMention("USD", "currency")],
        patterns=["items.price"],
    )
    got = extract_semantic_state(_question(), introspect_schema(shop_db), _gw([render_state_block(state)]))
    assert got == state


def test_extraction_fallback_after_rounds(shop_db):
    gw = _gw(["I think it is fast.", "Still prose."])
    got = extract_semantic_state(_question(), introspect_schema(shop_db), gw)
    assert got.fallback and got.is_empty() and got.warnings
    assert gw.ledger.total().calls == 2


def test_extraction_speed_question(shop_db):
    reply = "\n".join([
        "```state",
        "INTENT: compute speed",
        "RATIONALE: distance over time",
        "ENTITIES: trip",
        "RELATIONS:",
        "- trip | covers | distance | unit=km",
        "- garbage without fields",
        "NUMBERS:",
        "- 20 | 20 km",
        "- 0.5 | 0.5 h",
        "UNITS:",
        "- km",
        "- h",
        "PATTERNS:",
        "```",
    ])
    got = extract_semantic_state(
        _question("speed over 20 km in 0.5 h"), introspect_schema(shop_db), _gw([reply]), RB
    )
    assert [n.value for n in got.numerics] == [20, 0.5]
    assert got.units == [UnitMention("km", "length"), UnitMention("h", "time")]
    assert got.relations == [rel("trip", "covers", "distance", "km")]
    assert len(got.warnings) == 1 and not got.fallback


def test_parse_state_block_none_for_prose():
    assert parse_state_block("no labels here") is None


def test_reflexive_relation_rule():
    with pytest.raises(ValueError):
        rel("a", "is", "A")
    assert RelationHypothesis("a", "is", "a", reflexive=True).reflexive


# -- full stage ---------------------------------------------------------------

def _run(shop_db, relations, rulebase, config=UnderstandingConfig()):
    state = SemanticState(intent="x", relations=relations)
    return run_understanding(_question(), introspect_schema(shop_db), rulebase, config, _gw([render_state_block(state)]))


def test_run_pass_through(shop_db):
    relations = [
        rel("distance", "divided by", "time", "km/h", "speed = distance / time"),
        rel("mass", "over", "volume", "kg/m3", "density = mass / volume"),
    ]
    out = _run(shop_db, relations, RB)
    assert all(s.score == 1.0 for s in out.scored)
    assert out.r_high == out.r_init == relations


def test_run_empty_rulebase(shop_db):
    out = _run(shop_db, [rel("distance", "divided by", "time")], RuleBase.empty())
    assert out.r_high == [] and out.state.relations
    trace = out.trace()
    assert set(trace) >= {"state", "R_init", "R_cand", "scored", "R_high"}


MIXED = [
    rel("distance", "divided by", "time", "km/h", "speed = distance / time"),
    rel("trip", "covers", "distance", "km"),
    rel("energy", "per", "time", "kW"),
    rel("apple", "tastes", "sweet"),
    rel("mass", "times", "acceleration", "kg", "force = mass * acceleration"),
    rel("price", "times", "energy", "USD", "cost = energy * price"),
    rel("principal", "grows", "rate", "EUR", "speed = distance / time"),
    rel("total", "over", "count", None, "average = total / count"),
]


def test_run_matches_oracle(shop_db):
    cfg = UnderstandingConfig()
    out = _run(shop_db, MIXED, RB, cfg)
    sim = lambda r, c: similarity(r, c.unit, c.equation, RB)
    score = lambda r: score_relation(r, RB).score
    r_cand, scores, r_high = oracles.alg1(MIXED, RB.constraints, sim, score, cfg.delta_match, cfg.tau)
    assert out.r_cand == r_cand
    assert [s.score for s in out.scored] == scores
    assert out.r_high == r_high
    # the fixture exercises every outcome
    assert 0 < len(r_high) < len(r_cand) < len(MIXED)


relations_st = st.lists(st.sampled_from(MIXED), max_size=8)
thresholds = st.floats(0.0, 1.0)


@settings(max_examples=60)
@given(relations_st, thresholds, thresholds)
def test_threshold_monotonicity(relations, a, b):
    lo, hi = min(a, b), max(a, b)
    cand_lo, scored_lo, high_lo = verify_relations(relations, RB, UnderstandingConfig(delta_match=lo, tau=lo))
    cand_hi, _, _ = verify_relations(relations, RB, UnderstandingConfig(delta_match=hi, tau=lo))
    assert set(cand_hi) <= set(cand_lo)
    assert set(filter_high(scored_lo, hi)) <= set(filter_high(scored_lo, lo))
    # inclusion chain
    assert set(high_lo) <= set(cand_lo) <= set(relations)


words = st.sampled_from(["speed", "distance", "time", "mass", "the", "energy", "of", "42", "x"])


@given(st.lists(words, min_size=1, max_size=4), st.lists(words, min_size=1, max_size=4),
       st.sampled_from([None, "km/h", "kg", "h"]))
def test_similarity_bounded_and_symmetric(a, b, unit):
    ra = RelationHypothesis(a[0], " ".join(a[1:]) or "p", "o1", unit)
    value = similarity(ra, SPEED, " ".join(b), RB)
    assert 0.0 <= value <= 1.0
    ta, tb = tokens(" ".join(a)), tokens(" ".join(b))
    assert jaccard(ta, tb) == jaccard(tb, ta)


# -- optional model-judged soft checks -------------------------------------------

SOFT_RB = RuleBase(
    constraints=[Constraint(frozenset({"trip"}), UnitSpec("speed", ("knot",)), "speed = distance / time")],
    units={"km/h": "speed", "knot": "speed"},
)
SOFT_REL = rel("trip", "has", "pace", "km/h", "power = energy / time")  # checks (1, 1, 0.5, 0)


def _soft_run(shop_db, check_replies):
    entries = [{"template": "information-understanding",
                "responses": [render_state_block(SemanticState(intent="x", relations=[SOFT_REL]))]}]
    if check_replies is not None:
        entries.append({"template": "rule-check", "responses": check_replies, "cycle": True})
    gw = scripted(entries)
    cfg = UnderstandingConfig(delta_match=0.0, llm_soft_check=True)
    out = run_understanding(_question(), introspect_schema(shop_db), SOFT_RB, cfg, gw)
    return out.scored[0], gw


@pytest.mark.parametrize("reply, checks", [
    ("VERDICT: pass", (1.0, 1.0, 1.0, 0.0)),
    ("verdict: FAIL", (1.0, 1.0, 0.0, 0.0)),
    ("VERDICT: unsure", (1.0, 1.0, 0.5, 0.0)),
    ("no idea", (1.0, 1.0, 0.5, 0.0)),
])
def test_soft_check_resolution(shop_db, reply, checks):
    scored, gw = _soft_run(shop_db, [reply])
    assert scored.checks == checks
    assert scored.score == pytest.approx(sum(checks) / 4)
    assert gw.ledger.by_stage["understanding"].calls == 2


def test_soft_check_gateway_error_keeps_soft(shop_db):
    scored, _ = _soft_run(shop_db, None)
    assert scored.checks == (1.0, 1.0, 0.5, 0.0)


def test_soft_check_off_by_default(shop_db):
    out = _run(shop_db, [SOFT_REL], SOFT_RB, UnderstandingConfig(delta_match=0.0))
    assert out.scored[0].checks == (1.0, 1.0, 0.5, 0.0)
